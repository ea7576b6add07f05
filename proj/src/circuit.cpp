#include "fesram/circuit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fesram/error.hpp"

namespace fesram::engine {

bool is_ground_name(const std::string& name) {
    if (name == "0") return true;
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "gnd";
}

SourceWaveform SourceWaveform::constant(double value) {
    SourceWaveform w;
    w.shape = Shape::Dc;
    w.dc = value;
    return w;
}

SourceWaveform SourceWaveform::piecewise(std::vector<std::pair<double, double>> points) {
    SourceWaveform w;
    w.shape = Shape::Pwl;
    w.pwl = std::move(points);
    w.validate();
    w.dc = w.pwl.front().second;
    return w;
}

SourceWaveform SourceWaveform::pulsed(const Pulse& p) {
    SourceWaveform w;
    w.shape = Shape::Pulse;
    w.pulse = p;
    w.validate();
    w.dc = p.v1;
    return w;
}

void SourceWaveform::validate() const {
    switch (shape) {
        case Shape::Dc:
            if (!std::isfinite(dc)) throw DomainError("non-finite DC value");
            break;
        case Shape::Pwl:
            if (pwl.empty()) throw DomainError("PWL needs at least one point");
            for (std::size_t i = 1; i < pwl.size(); ++i) {
                if (!(pwl[i].first > pwl[i - 1].first)) throw DomainError("PWL times must be strictly increasing");
            }
            break;
        case Shape::Pulse:
            if (!(pulse.rise > 0.0 && pulse.fall > 0.0)) throw DomainError("PULSE rise/fall must be > 0");
            if (!(pulse.width >= 0.0 && pulse.delay >= 0.0 && pulse.period >= 0.0)) {
                throw DomainError("PULSE timing must be non-negative");
            }
            if (pulse.period > 0.0 && pulse.period < pulse.rise + pulse.width + pulse.fall) {
                throw DomainError("PULSE period shorter than one pulse");
            }
            break;
    }
}

double SourceWaveform::value(double t) const {
    switch (shape) {
        case Shape::Dc:
            return dc;
        case Shape::Pwl: {
            if (t <= pwl.front().first) return pwl.front().second;
            if (t >= pwl.back().first) return pwl.back().second;
            auto hi = std::upper_bound(pwl.begin(), pwl.end(), t,
                                       [](double v, const auto& p) { return v < p.first; });
            auto lo = hi - 1;
            const double f = (t - lo->first) / (hi->first - lo->first);
            return lo->second + f * (hi->second - lo->second);
        }
        case Shape::Pulse: {
            const auto& p = pulse;
            if (t < p.delay) return p.v1;
            double local = t - p.delay;
            if (p.period > 0.0) local = std::fmod(local, p.period);
            if (local < p.rise) return p.v1 + (p.v2 - p.v1) * local / p.rise;
            local -= p.rise;
            if (local < p.width) return p.v2;
            local -= p.width;
            if (local < p.fall) return p.v2 + (p.v1 - p.v2) * local / p.fall;
            return p.v1;
        }
    }
    return dc;
}

std::vector<double> SourceWaveform::breakpoints(double tstop) const {
    std::vector<double> out;
    if (shape == Shape::Pwl) {
        for (const auto& [t, v] : pwl) {
            if (t > 0.0 && t <= tstop) out.push_back(t);
        }
    } else if (shape == Shape::Pulse) {
        const auto& p = pulse;
        for (double start = p.delay; start <= tstop;) {
            for (double t : {start, start + p.rise, start + p.rise + p.width, start + p.rise + p.width + p.fall}) {
                if (t > 0.0 && t <= tstop) out.push_back(t);
            }
            if (p.period <= 0.0) break;
            start += p.period;
        }
    }
    return out;
}

NodeId Circuit::add_node(const std::string& name) {
    if (is_ground_name(name)) return kGround;
    if (auto it = node_index_.find(name); it != node_index_.end()) return it->second;
    const NodeId id = static_cast<NodeId>(node_names_.size());
    node_names_.push_back(name);
    node_index_.emplace(name, id);
    return id;
}

NodeId Circuit::node(const std::string& name) const {
    if (is_ground_name(name)) return kGround;
    auto it = node_index_.find(name);
    if (it == node_index_.end()) throw Error("unknown node '" + name + "'");
    return it->second;
}

bool Circuit::has_node(const std::string& name) const {
    return is_ground_name(name) || node_index_.count(name) > 0;
}

void Circuit::add(Device device) {
    if (auto* v = std::get_if<VoltageSource>(&device)) v->branch = vsource_count_++;
    devices_.push_back(std::move(device));
}

namespace {

template <typename T>
T* find_named(std::vector<Device>& devices, const std::string& name) {
    for (auto& d : devices) {
        if (auto* p = std::get_if<T>(&d); p && p->name == name) return p;
    }
    return nullptr;
}

}  // namespace

VoltageSource& Circuit::vsource(const std::string& name) {
    if (auto* v = find_named<VoltageSource>(devices_, name)) return *v;
    throw Error("no voltage source named '" + name + "'");
}

CurrentSource& Circuit::isource(const std::string& name) {
    if (auto* v = find_named<CurrentSource>(devices_, name)) return *v;
    throw Error("no current source named '" + name + "'");
}

Fefet& Circuit::fefet(const std::string& name) {
    if (auto* v = find_named<Fefet>(devices_, name)) return *v;
    throw Error("no FeFET named '" + name + "'");
}

const Fefet& Circuit::fefet(const std::string& name) const {
    return const_cast<Circuit*>(this)->fefet(name);
}

std::vector<std::string> Circuit::vsource_names() const {
    std::vector<std::string> out(static_cast<std::size_t>(vsource_count_));
    for (const auto& d : devices_) {
        if (const auto* v = std::get_if<VoltageSource>(&d)) out[static_cast<std::size_t>(v->branch)] = v->name;
    }
    return out;
}

std::vector<std::string> Circuit::fefet_names() const {
    std::vector<std::string> out;
    for (const auto& d : devices_) {
        if (const auto* f = std::get_if<Fefet>(&d)) out.push_back(f->name);
    }
    return out;
}

std::size_t Circuit::fefet_count() const { return fefet_names().size(); }

void Circuit::validate() const {
    const auto check = [&](NodeId n, const std::string& who) {
        if (n != kGround && (n < 0 || n >= node_count())) throw Error("device '" + who + "' has invalid node");
    };
    for (const auto& d : devices_) {
        std::visit(
            [&](const auto& dev) {
                using T = std::decay_t<decltype(dev)>;
                if constexpr (std::is_same_v<T, Mosfet> || std::is_same_v<T, Fefet>) {
                    check(dev.gate, dev.name);
                    check(dev.drain, dev.name);
                    check(dev.source, dev.name);
                } else if constexpr (std::is_same_v<T, Resistor> || std::is_same_v<T, Capacitor>) {
                    check(dev.a, dev.name);
                    check(dev.b, dev.name);
                } else {
                    check(dev.pos, dev.name);
                    check(dev.neg, dev.name);
                }
            },
            d);
    }
}

}  // namespace fesram::engine
