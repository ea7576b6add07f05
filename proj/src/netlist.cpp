#include "fesram/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "fesram/error.hpp"

namespace fesram::netlist {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::optional<double> parse_si(std::string_view token, std::string* bad_suffix) {
    if (token.empty()) return std::nullopt;
    std::size_t offset = 0;
    if (token[0] == '+') offset = 1;
    double mantissa = 0.0;
    const char* first = token.data() + offset;
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, mantissa, std::chars_format::general);
    if (ec != std::errc() || ptr == first) return std::nullopt;
    if (!std::isfinite(mantissa)) return std::nullopt;

    const std::string suffix = lower(std::string_view(ptr, static_cast<std::size_t>(last - ptr)));
    double scale = 1.0;
    if (suffix.empty()) {
        scale = 1.0;
    } else if (suffix == "meg") {
        scale = 1e6;
    } else if (suffix.size() == 1) {
        switch (suffix[0]) {
            case 'f': scale = 1e-15; break;
            case 'p': scale = 1e-12; break;
            case 'n': scale = 1e-9; break;
            case 'u': scale = 1e-6; break;
            case 'm': scale = 1e-3; break;
            case 'k': scale = 1e3; break;
            case 'g': scale = 1e9; break;
            default:
                if (bad_suffix) *bad_suffix = suffix;
                return std::nullopt;
        }
    } else {
        if (bad_suffix) *bad_suffix = suffix;
        return std::nullopt;
    }
    const double v = mantissa * scale;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

namespace {

struct Token {
    std::string text;
    int line;
    int column;
};

struct LogicalLine {
    std::vector<Token> tokens;
    int line;
};

bool is_punct(char c) { return c == '(' || c == ')' || c == ',' || c == '='; }

std::vector<Token> tokenize(std::string_view text, int line, int column_offset) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_punct(c)) {
            out.push_back({std::string(1, c), line, static_cast<int>(i) + 1 + column_offset});
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && !is_punct(text[i])) ++i;
        out.push_back({lower(text.substr(start, i - start)), line, static_cast<int>(start) + 1 + column_offset});
    }
    return out;
}

[[noreturn]] void fail(const std::string& message, const Token& at) { throw ParseError(message, at.line, at.column); }
[[noreturn]] void fail(const std::string& message, int line, int column) { throw ParseError(message, line, column); }

double number(const Token& t) {
    std::string bad;
    if (auto v = parse_si(t.text, &bad)) return *v;
    if (!bad.empty()) fail("unknown suffix '" + bad + "'", t);
    fail("expected a number, got '" + t.text + "'", t);
}

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '.' || c == '#' || c == '$' || c == '[' || c == ']' || c == ':' ||
               c == '-' || c == '+' || c == '!' || c == '<' || c == '>';
    });
}

// Cursor over one logical line.
class Cursor {
public:
    explicit Cursor(const LogicalLine& line) : line_(line) {}

    bool done() const { return pos_ >= line_.tokens.size(); }
    const Token& peek() const {
        if (done()) fail_end("unexpected end of line");
        return line_.tokens[pos_];
    }
    bool peek_is(std::string_view s) const { return !done() && line_.tokens[pos_].text == s; }
    const Token& next(std::string_view what) {
        if (done()) fail_end("missing " + std::string(what));
        return line_.tokens[pos_++];
    }
    void expect(std::string_view s) {
        const Token& t = next("'" + std::string(s) + "'");
        if (t.text != s) fail("expected '" + std::string(s) + "', got '" + t.text + "'", t);
    }
    std::string node(std::string_view what) {
        const Token& t = next(what);
        if (!is_identifier(t.text)) fail("invalid node name '" + t.text + "'", t);
        return t.text;
    }
    void finish() {
        if (!done()) fail("unexpected token '" + line_.tokens[pos_].text + "'", line_.tokens[pos_]);
    }
    [[noreturn]] void fail_end(const std::string& message) const {
        const Token& last = line_.tokens.back();
        fail(message, last.line, last.column + static_cast<int>(last.text.size()));
    }

private:
    const LogicalLine& line_;
    std::size_t pos_ = 0;
};

engine::SourceWaveform parse_source(Cursor& c) {
    using engine::SourceWaveform;
    if (c.peek_is("pwl")) {
        const Token head = c.next("pwl");
        c.expect("(");
        std::vector<std::pair<double, double>> pts;
        std::vector<Token> where;
        while (!c.peek_is(")")) {
            if (c.peek_is(",")) {
                c.next(",");
                continue;
            }
            const Token t = c.next("PWL time");
            const double time = number(t);
            if (c.peek_is(",")) c.next(",");
            const double value = number(c.next("PWL value"));
            if (!pts.empty() && !(time > pts.back().first)) fail("PWL times must be strictly increasing", t);
            pts.emplace_back(time, value);
        }
        c.expect(")");
        if (pts.empty()) fail("PWL needs at least one point", head);
        return SourceWaveform::piecewise(std::move(pts));
    }
    if (c.peek_is("pulse")) {
        const Token head = c.next("pulse");
        c.expect("(");
        std::vector<double> v;
        while (!c.peek_is(")")) {
            if (c.peek_is(",")) {
                c.next(",");
                continue;
            }
            v.push_back(number(c.next("PULSE parameter")));
        }
        c.expect(")");
        if (v.size() < 6 || v.size() > 7) fail("PULSE needs 6 or 7 parameters (v1 v2 td tr tf pw [per])", head);
        SourceWaveform::Pulse p{v[0], v[1], v[2], v[3], v[4], v[5], v.size() == 7 ? v[6] : 0.0};
        if (!(p.rise > 0.0 && p.fall > 0.0)) fail("PULSE rise and fall must be > 0", head);
        if (!(p.delay >= 0.0 && p.width >= 0.0 && p.period >= 0.0)) fail("PULSE timing must be non-negative", head);
        if (p.period > 0.0 && p.period < p.rise + p.width + p.fall) fail("PULSE period shorter than one pulse", head);
        return SourceWaveform::pulsed(p);
    }
    if (c.peek_is("dc")) c.next("dc");
    return SourceWaveform::constant(number(c.next("source value")));
}

PolarizationTag parse_tag(Cursor& c) {
    PolarizationTag tag;
    const Token& t = c.next("polarization tag (lvt, hvt or a list)");
    if (t.text == "lvt") {
        tag.kind = PolarizationTag::Kind::Lvt;
    } else if (t.text == "hvt") {
        tag.kind = PolarizationTag::Kind::Hvt;
    } else if (t.text == "(") {
        tag.kind = PolarizationTag::Kind::List;
        while (!c.peek_is(")")) {
            if (c.peek_is(",")) {
                c.next(",");
                continue;
            }
            const Token& v = c.next("polarization value");
            const double p = number(v);
            if (!(p >= -1.0 && p <= 1.0)) fail("polarization value outside [-1, 1]", v);
            tag.values.push_back(p);
        }
        c.expect(")");
        if (tag.values.empty()) fail("empty polarization list", t);
    } else {
        fail("expected polarization tag (lvt, hvt or a list), got '" + t.text + "'", t);
    }
    return tag;
}

Element parse_element(const LogicalLine& line) {
    Cursor c(line);
    const Token& head = c.next("element name");
    Element e;
    e.name = head.text;
    e.line = head.line;
    switch (head.text[0]) {
        case 'r':
        case 'c': {
            e.kind = head.text[0] == 'r' ? ElementKind::Resistor : ElementKind::Capacitor;
            e.nodes = {c.node("first node"), c.node("second node")};
            const Token& v = c.next("value");
            e.value = number(v);
            if (!(e.value > 0.0)) fail("value must be positive", v);
            break;
        }
        case 'v':
        case 'i':
            e.kind = head.text[0] == 'v' ? ElementKind::VSource : ElementKind::ISource;
            e.nodes = {c.node("positive node"), c.node("negative node")};
            e.source = parse_source(c);
            break;
        case 'm':
        case 'f':
            e.kind = head.text[0] == 'm' ? ElementKind::Mosfet : ElementKind::Fefet;
            e.nodes = {c.node("gate node"), c.node("drain node"), c.node("source node")};
            {
                const Token& m = c.next("model name");
                if (!is_identifier(m.text)) fail("invalid model name '" + m.text + "'", m);
                e.model = m.text;
            }
            if (e.kind == ElementKind::Fefet) e.polarization = parse_tag(c);
            break;
        default:
            fail("unknown element type '" + std::string(1, head.text[0]) + "'", head);
    }
    c.finish();
    return e;
}

ModelCard parse_model(Cursor& c, int line) {
    ModelCard card;
    card.line = line;
    const Token& name = c.next("model name");
    if (!is_identifier(name.text)) fail("invalid model name '" + name.text + "'", name);
    card.name = name.text;
    const Token& type = c.next("model type");
    static const std::set<std::string> kTypes = {"nmos", "pmos", "nfefet", "pfefet"};
    if (!kTypes.count(type.text)) fail("unknown model type '" + type.text + "'", type);
    card.type = type.text;
    const bool paren = c.peek_is("(");
    if (paren) c.next("(");
    while (!c.done() && !c.peek_is(")")) {
        if (c.peek_is(",")) {
            c.next(",");
            continue;
        }
        const Token& key = c.next("parameter name");
        if (!is_identifier(key.text)) fail("invalid parameter name '" + key.text + "'", key);
        c.expect("=");
        const Token& value = c.next("parameter value");
        std::string bad;
        if (auto v = parse_si(value.text, &bad)) {
            card.params[key.text] = *v;
        } else if (bad.empty() && is_identifier(value.text) && !std::isdigit(static_cast<unsigned char>(value.text[0])) &&
                   value.text[0] != '-' && value.text[0] != '+' && value.text[0] != '.') {
            card.options[key.text] = value.text;
        } else if (!bad.empty()) {
            fail("unknown suffix '" + bad + "'", value);
        } else {
            fail("invalid parameter value '" + value.text + "'", value);
        }
    }
    if (paren) c.expect(")");
    c.finish();
    return card;
}

AnalysisDirective parse_directive(const LogicalLine& line, const Token& head, Cursor& c) {
    AnalysisDirective d;
    d.line = head.line;
    if (head.text == ".tran") {
        d.kind = AnalysisDirective::Kind::Tran;
        const Token& a = c.next("dtmax");
        d.dtmax = number(a);
        const Token& b = c.next("tstop");
        d.tstop = number(b);
        if (!(d.dtmax > 0.0)) fail(".tran dtmax must be > 0", a);
        if (!(d.tstop > 0.0)) fail(".tran tstop must be > 0", b);
    } else if (head.text == ".dc") {
        d.kind = AnalysisDirective::Kind::Dc;
        d.source = c.node("source name");
        d.start = number(c.next("start"));
        d.stop = number(c.next("stop"));
        const Token& s = c.next("step");
        d.step = number(s);
        if (d.step == 0.0) fail(".dc step must be nonzero", s);
        if ((d.stop - d.start) * d.step < 0.0) fail(".dc step sign inconsistent with start/stop", s);
    } else if (head.text == ".op") {
        d.kind = AnalysisDirective::Kind::Op;
    } else if (head.text == ".ic") {
        d.kind = AnalysisDirective::Kind::Ic;
        while (!c.done()) {
            const Token& v = c.next("v(node)=value");
            if (v.text != "v") fail("expected v(node)=value, got '" + v.text + "'", v);
            c.expect("(");
            const std::string node = c.node("node name");
            c.expect(")");
            c.expect("=");
            d.initial.emplace_back(node, number(c.next("initial value")));
        }
        if (d.initial.empty()) fail(".ic needs at least one v(node)=value", head);
    } else {
        fail("unknown directive '" + head.text + "'", head);
    }
    (void)line;
    c.finish();
    return d;
}

}  // namespace

Netlist parse(std::string_view text) {
    Netlist out;
    std::vector<LogicalLine> lines;
    bool have_title = false;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        ++line_no;
        pos = end + 1;

        const auto first = raw.find_first_not_of(" \t");
        if (first == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        if (raw[first] == '*') {
            if (end == text.size()) break;
            continue;
        }
        if (!have_title) {
            std::string_view t = raw.substr(first);
            while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.remove_suffix(1);
            out.title = std::string(t);
            have_title = true;
        } else if (raw[first] == '+') {
            if (lines.empty()) fail("continuation line with nothing to continue", line_no, static_cast<int>(first) + 1);
            auto more = tokenize(raw.substr(first + 1), line_no, static_cast<int>(first) + 1);
            lines.back().tokens.insert(lines.back().tokens.end(), more.begin(), more.end());
        } else {
            for (char ch : raw) {
                if (static_cast<unsigned char>(ch) < 0x20 && ch != '\t') {
                    fail("control character in input", line_no, static_cast<int>(&ch - raw.data()) + 1);
                }
            }
            lines.push_back({tokenize(raw, line_no, 0), line_no});
        }
        if (end == text.size()) break;
    }

    std::set<std::string> names;
    for (const auto& line : lines) {
        const Token& head = line.tokens.front();
        if (head.text[0] == '.') {
            Cursor c(line);
            c.next("directive");
            if (head.text == ".end") {
                c.finish();
                break;
            }
            if (head.text == ".model") {
                ModelCard card = parse_model(c, head.line);
                for (const auto& m : out.models) {
                    if (m.name == card.name) fail("duplicate model '" + card.name + "'", head);
                }
                out.models.push_back(std::move(card));
            } else {
                out.directives.push_back(parse_directive(line, head, c));
            }
            continue;
        }
        if (is_punct(head.text[0])) fail("unexpected '" + head.text + "'", head);
        Element e = parse_element(line);
        if (!names.insert(e.name).second) fail("duplicate element name '" + e.name + "'", head);
        out.elements.push_back(std::move(e));
    }
    return out;
}

namespace {

void write_source(std::ostream& os, const engine::SourceWaveform& w) {
    using Shape = engine::SourceWaveform::Shape;
    switch (w.shape) {
        case Shape::Dc:
            os << "dc " << format_number(w.dc);
            break;
        case Shape::Pwl:
            os << "pwl(";
            for (std::size_t i = 0; i < w.pwl.size(); ++i) {
                os << (i ? " " : "") << format_number(w.pwl[i].first) << ' ' << format_number(w.pwl[i].second);
            }
            os << ')';
            break;
        case Shape::Pulse: {
            const auto& p = w.pulse;
            os << "pulse(" << format_number(p.v1) << ' ' << format_number(p.v2) << ' ' << format_number(p.delay) << ' '
               << format_number(p.rise) << ' ' << format_number(p.fall) << ' ' << format_number(p.width) << ' '
               << format_number(p.period) << ')';
            break;
        }
    }
}

}  // namespace

std::string unparse(const Netlist& netlist) {
    std::ostringstream os;
    os << netlist.title << '\n';
    for (const auto& m : netlist.models) {
        os << ".model " << m.name << ' ' << m.type << " (";
        bool first = true;
        for (const auto& [k, v] : m.params) {
            os << (first ? "" : " ") << k << '=' << format_number(v);
            first = false;
        }
        for (const auto& [k, v] : m.options) {
            os << (first ? "" : " ") << k << '=' << v;
            first = false;
        }
        os << ")\n";
    }
    for (const auto& e : netlist.elements) {
        os << e.name;
        for (const auto& n : e.nodes) os << ' ' << n;
        switch (e.kind) {
            case ElementKind::Resistor:
            case ElementKind::Capacitor:
                os << ' ' << format_number(e.value);
                break;
            case ElementKind::VSource:
            case ElementKind::ISource:
                os << ' ';
                write_source(os, e.source);
                break;
            case ElementKind::Mosfet:
                os << ' ' << e.model;
                break;
            case ElementKind::Fefet:
                os << ' ' << e.model << ' ';
                switch (e.polarization.kind) {
                    case PolarizationTag::Kind::Lvt: os << "lvt"; break;
                    case PolarizationTag::Kind::Hvt: os << "hvt"; break;
                    case PolarizationTag::Kind::List:
                    case PolarizationTag::Kind::None:
                        os << '(';
                        for (std::size_t i = 0; i < e.polarization.values.size(); ++i) {
                            os << (i ? " " : "") << format_number(e.polarization.values[i]);
                        }
                        os << ')';
                        break;
                }
                break;
        }
        os << '\n';
    }
    for (const auto& d : netlist.directives) {
        using K = AnalysisDirective::Kind;
        switch (d.kind) {
            case K::Tran: os << ".tran " << format_number(d.dtmax) << ' ' << format_number(d.tstop); break;
            case K::Dc:
                os << ".dc " << d.source << ' ' << format_number(d.start) << ' ' << format_number(d.stop) << ' '
                   << format_number(d.step);
                break;
            case K::Op: os << ".op"; break;
            case K::Ic:
                os << ".ic";
                for (const auto& [n, v] : d.initial) os << " v(" << n << ")=" << format_number(v);
                break;
        }
        os << '\n';
    }
    os << ".end\n";
    return os.str();
}

namespace {

template <typename Params>
void apply_mos_keys(const ModelCard& card, Params& p, std::set<std::string>& used) {
    const auto take = [&](const char* key, double& field) {
        if (auto it = card.params.find(key); it != card.params.end()) {
            field = it->second;
            used.insert(key);
        }
    };
    take("vth0", p.vth0);
    take("kprime", p.kprime);
    take("n", p.n_sub);
    take("lambda", p.lambda);
    take("vt", p.vt_thermal);
}

void reject_unused(const ModelCard& card, const std::set<std::string>& used) {
    for (const auto& [k, v] : card.params) {
        if (!used.count(k)) {
            throw ElaborationError("unknown parameter '" + k + "' in model '" + card.name + "' (line " +
                                   std::to_string(card.line) + ")");
        }
    }
}

}  // namespace

void ModelLibrary::add_cards(const std::vector<ModelCard>& cards) {
    for (const auto& card : cards) {
        std::set<std::string> used;
        if (card.type == "nmos" || card.type == "pmos") {
            device::MosfetParams p;
            p.polarity = card.type == "nmos" ? device::Polarity::N : device::Polarity::P;
            p.vth0 = card.type == "nmos" ? 0.4 : -0.4;
            apply_mos_keys(card, p, used);
            reject_unused(card, used);
            if (!card.options.empty()) {
                throw ElaborationError("model '" + card.name + "' has non-numeric parameter '" +
                                       card.options.begin()->first + "'");
            }
            try {
                p.validate();
            } catch (const DomainError& e) {
                throw ElaborationError("model '" + card.name + "': " + e.what());
            }
            mosfets[card.name] = p;
        } else {
            device::FeFetParams f;
            f.base.polarity = card.type == "nfefet" ? device::Polarity::N : device::Polarity::P;
            f.base.vth0 = card.type == "nfefet" ? 1.0 : -1.0;
            f.kinetics = device::calibrate_kinetics({4.0, 10e-9}, {2.0, 100.0});
            apply_mos_keys(card, f.base, used);
            const auto take = [&](const char* key, double& field) {
                if (auto it = card.params.find(key); it != card.params.end()) {
                    field = it->second;
                    used.insert(key);
                }
            };
            take("mw", f.mw);
            take("tau0", f.kinetics.tau0);
            take("v0", f.kinetics.v0);
            take("reach", f.profile.reach);
            take("sharpness", f.profile.sharpness);
            double segments = 8;
            take("segments", segments);
            reject_unused(card, used);
            for (const auto& [k, v] : card.options) {
                if (k != "profile") throw ElaborationError("unknown option '" + k + "' in model '" + card.name + "'");
                if (v == "linear") {
                    f.profile.kind = device::ChannelProfile::Kind::Linear;
                } else if (v == "junction") {
                    f.profile.kind = device::ChannelProfile::Kind::Junction;
                } else {
                    throw ElaborationError("unknown profile '" + v + "' in model '" + card.name + "'");
                }
            }
            if (!(segments >= 1 && segments <= 4096 && segments == std::floor(segments))) {
                throw ElaborationError("model '" + card.name + "': segments must be a positive integer");
            }
            try {
                f.validate();
            } catch (const DomainError& e) {
                throw ElaborationError("model '" + card.name + "': " + e.what());
            }
            fefets[card.name] = f;
            fefet_segments[card.name] = static_cast<std::size_t>(segments);
        }
    }
}

Elaborated elaborate(const Netlist& netlist, const ModelLibrary& models) {
    ModelLibrary lib = models;
    lib.add_cards(netlist.models);

    bool has_ground = false;
    std::map<std::string, int> refs;
    for (const auto& e : netlist.elements) {
        for (const auto& n : e.nodes) {
            if (engine::is_ground_name(n)) has_ground = true;
            ++refs[n];
        }
    }
    if (!has_ground) throw ElaborationError("no ground node");

    Elaborated out;
    engine::Circuit& c = out.circuit;
    for (const auto& e : netlist.elements) {
        std::vector<engine::NodeId> ids;
        for (const auto& n : e.nodes) ids.push_back(c.add_node(n));
        switch (e.kind) {
            case ElementKind::Resistor:
                c.add(engine::Resistor{e.name, ids[0], ids[1], e.value});
                break;
            case ElementKind::Capacitor:
                c.add(engine::Capacitor{e.name, ids[0], ids[1], e.value});
                break;
            case ElementKind::VSource:
                c.add(engine::VoltageSource{e.name, ids[0], ids[1], e.source});
                break;
            case ElementKind::ISource:
                c.add(engine::CurrentSource{e.name, ids[0], ids[1], e.source});
                break;
            case ElementKind::Mosfet: {
                auto it = lib.mosfets.find(e.model);
                if (it == lib.mosfets.end()) {
                    throw ElaborationError("unknown model '" + e.model + "' for element '" + e.name + "' (line " +
                                           std::to_string(e.line) + ")");
                }
                c.add(engine::Mosfet{e.name, ids[0], ids[1], ids[2], it->second});
                break;
            }
            case ElementKind::Fefet: {
                auto it = lib.fefets.find(e.model);
                if (it == lib.fefets.end()) {
                    throw ElaborationError("unknown model '" + e.model + "' for element '" + e.name + "' (line " +
                                           std::to_string(e.line) + ")");
                }
                std::size_t segments = 8;
                if (auto s = lib.fefet_segments.find(e.model); s != lib.fefet_segments.end()) segments = s->second;
                device::FeFetState state;
                switch (e.polarization.kind) {
                    case PolarizationTag::Kind::Lvt: state = device::FeFetState::lvt(segments); break;
                    case PolarizationTag::Kind::Hvt: state = device::FeFetState::hvt(segments); break;
                    case PolarizationTag::Kind::List:
                        state.segments = e.polarization.values;
                        if (lib.fefet_segments.count(e.model) && state.segments.size() != segments) {
                            throw ElaborationError("polarization list of '" + e.name + "' has " +
                                                   std::to_string(state.segments.size()) + " values, model has " +
                                                   std::to_string(segments) + " segments");
                        }
                        break;
                    case PolarizationTag::Kind::None:
                        throw ElaborationError("FeFET '" + e.name + "' needs a polarization tag");
                }
                c.add(engine::Fefet{e.name, ids[0], ids[1], ids[2], it->second, state});
                break;
            }
        }
    }

    for (const auto& [name, count] : refs) {
        if (count == 1 && !engine::is_ground_name(name)) {
            c.warnings.push_back("node '" + name + "' is referenced only once (dangling)");
        }
    }

    for (const auto& d : netlist.directives) {
        if (d.kind == AnalysisDirective::Kind::Ic) {
            for (const auto& [node, v] : d.initial) {
                if (!c.has_node(node)) {
                    throw ElaborationError(".ic references unknown node '" + node + "' (line " +
                                           std::to_string(d.line) + ")");
                }
                c.initial_conditions[node] = v;
            }
        } else {
            out.plan.push_back(d);
        }
    }
    return out;
}

}  // namespace fesram::netlist
