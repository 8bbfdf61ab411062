#include <epsvp/cli.hpp>

int main(int argc, char** argv)
{
    return epsvp::cli::main(argc, argv);
}
