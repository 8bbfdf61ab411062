#include <epsvp/controller.hpp>
#include <epsvp/errors.hpp>

#include <cctype>

namespace epsvp {

std::string to_string(SourceStatus s)
{
    switch (s) {
        case SourceStatus::Off: return "Off";
        case SourceStatus::Available: return "Available";
        case SourceStatus::Failed: return "Failed";
    }
    return "?";
}

SourceStatus parse_source_status(std::string_view s)
{
    if (s == "Off") return SourceStatus::Off;
    if (s == "Available") return SourceStatus::Available;
    if (s == "Failed") return SourceStatus::Failed;
    throw ParseError("unknown source status '" + std::string(s) + "'");
}

std::string to_string(Trigger t)
{
    switch (t) {
        case Trigger::Always: return "always";
        case Trigger::Event: return "event";
        case Trigger::Tick: return "tick";
    }
    return "?";
}

Guard Guard::all_of(std::vector<Guard> gs)
{
    if (gs.empty()) return always();
    if (gs.size() == 1) return std::move(gs.front());
    return {Op::And, {}, SourceStatus::Off, std::move(gs)};
}

Guard Guard::any_of(std::vector<Guard> gs)
{
    if (gs.empty()) return {Op::False, {}, SourceStatus::Off, {}};
    if (gs.size() == 1) return std::move(gs.front());
    return {Op::Or, {}, SourceStatus::Off, std::move(gs)};
}

namespace {

bool is_id_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

class GuardParser
{
  public:
    explicit GuardParser(std::string_view text) : text_(text) {}

    Guard parse()
    {
        Guard g = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return g;
    }

  private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError("guard '" + std::string(text_) + "': " + msg + " at offset " + std::to_string(pos_));
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view tok)
    {
        if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
    }

    std::string identifier()
    {
        skip_ws();
        const auto start = pos_;
        while (pos_ < text_.size() && is_id_char(text_[pos_])) ++pos_;
        if (pos_ == start) fail("expected identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    Guard expr()
    {
        std::vector<Guard> parts{conj()};
        while (accept("||")) parts.push_back(conj());
        if (parts.size() == 1) return std::move(parts.front());
        return {Guard::Op::Or, {}, SourceStatus::Off, std::move(parts)};
    }

    Guard conj()
    {
        std::vector<Guard> parts{unary()};
        while (accept("&&")) parts.push_back(unary());
        if (parts.size() == 1) return std::move(parts.front());
        return {Guard::Op::And, {}, SourceStatus::Off, std::move(parts)};
    }

    Guard unary()
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '!' && text_.substr(pos_, 2) != "!=") {
            ++pos_;
            return Guard::negate(unary());
        }
        if (accept("(")) {
            Guard g = expr();
            expect(")");
            return g;
        }
        return atom();
    }

    Guard atom()
    {
        const std::string word = identifier();
        if (word == "true") return Guard::always();
        if (word == "false") return {Guard::Op::False, {}, SourceStatus::Off, {}};
        if (word == "low" || word == "opened" || word == "closed") {
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == '(') {
                expect("(");
                std::string id = identifier();
                expect(")");
                const auto op = word == "low" ? Guard::Op::Low : word == "opened" ? Guard::Op::Opened : Guard::Op::Closed;
                return {op, std::move(id), SourceStatus::Off, {}};
            }
        }
        Guard::Op op;
        if (accept("==")) op = Guard::Op::StatusEq;
        else if (accept("!=")) op = Guard::Op::StatusNe;
        else fail("expected '==' or '!=' after '" + word + "'");
        const std::string status = identifier();
        SourceStatus s;
        try {
            s = parse_source_status(status);
        } catch (const ParseError&) {
            fail("unknown status '" + status + "'");
        }
        return {op, word, s, {}};
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

void print(const Guard& g, std::string& out)
{
    using Op = Guard::Op;
    auto child = [&](const Guard& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };
    switch (g.op) {
        case Op::True: out += "true"; break;
        case Op::False: out += "false"; break;
        case Op::StatusEq: out += g.subject + " == " + to_string(g.status); break;
        case Op::StatusNe: out += g.subject + " != " + to_string(g.status); break;
        case Op::Low: out += "low(" + g.subject + ")"; break;
        case Op::Opened: out += "opened(" + g.subject + ")"; break;
        case Op::Closed: out += "closed(" + g.subject + ")"; break;
        case Op::Not: {
            out += '!';
            const auto& c = g.children.at(0);
            child(c, c.op == Op::And || c.op == Op::Or || c.op == Op::StatusEq || c.op == Op::StatusNe);
            break;
        }
        case Op::And:
            for (std::size_t i = 0; i < g.children.size(); ++i) {
                if (i) out += " && ";
                const auto& c = g.children[i];
                child(c, c.op == Op::And || c.op == Op::Or);
            }
            break;
        case Op::Or:
            for (std::size_t i = 0; i < g.children.size(); ++i) {
                if (i) out += " || ";
                const auto& c = g.children[i];
                child(c, c.op == Op::Or);
            }
            break;
    }
}

} // namespace

Guard Guard::parse(std::string_view text) { return GuardParser(text).parse(); }

std::string Guard::str() const
{
    std::string out;
    print(*this, out);
    return out;
}

Action Action::parse(std::string_view text)
{
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.empty() || text.back() != ')') {
        throw ParseError("malformed action '" + std::string(text) + "'");
    }
    const auto verb = text.substr(0, open);
    const auto target = text.substr(open + 1, text.size() - open - 2);
    if (target.empty()) throw ParseError("action '" + std::string(text) + "' has no target");
    Action a;
    a.target = std::string(target);
    if (verb == "open") a.kind = Kind::Open;
    else if (verb == "close") a.kind = Kind::Close;
    else if (verb == "shed") a.kind = Kind::Shed;
    else if (verb == "restore") a.kind = Kind::Restore;
    else throw ParseError("unknown action '" + std::string(verb) + "'");
    return a;
}

std::string Action::str() const
{
    switch (kind) {
        case Kind::Open: return "open(" + target + ")";
        case Kind::Close: return "close(" + target + ")";
        case Kind::Shed: return "shed(" + target + ")";
        case Kind::Restore: return "restore(" + target + ")";
    }
    return "?";
}

FsmInput FsmInput::parse(std::string_view text)
{
    if (text == "none") return none();
    if (text == "tick") return tick();
    if (const auto eq = text.find('='); eq != std::string_view::npos) {
        const auto id = text.substr(0, eq);
        if (id.empty()) throw ParseError("malformed input '" + std::string(text) + "'");
        return source(std::string(id), parse_source_status(text.substr(eq + 1)));
    }
    const auto open = text.find('(');
    if (open != std::string_view::npos && text.back() == ')' && open + 2 < text.size()) {
        const auto verb = text.substr(0, open);
        std::string id(text.substr(open + 1, text.size() - open - 2));
        if (verb == "opened") return opened(std::move(id));
        if (verb == "closed") return closed(std::move(id));
        if (verb == "low") return current_low(std::move(id));
    }
    throw ParseError("malformed input '" + std::string(text) + "'");
}

std::string FsmInput::str() const
{
    switch (kind) {
        case Kind::None: return "none";
        case Kind::Tick: return "tick";
        case Kind::Source: return id + "=" + to_string(status);
        case Kind::Opened: return "opened(" + id + ")";
        case Kind::Closed: return "closed(" + id + ")";
        case Kind::CurrentLow: return "low(" + id + ")";
    }
    return "?";
}

} // namespace epsvp
