#include <epsvp/network.hpp>

namespace epsvp {

template class NetworkSolver<double>;

} // namespace epsvp
