#pragma once

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fesram/device.hpp"

namespace fesram::engine {

/// Node index; ground is -1 and never an unknown.
using NodeId = int;
inline constexpr NodeId kGround = -1;

/// Time-dependent value of an independent source.
struct SourceWaveform {
    enum class Shape { Dc, Pwl, Pulse };

    struct Pulse {
        double v1 = 0.0;
        double v2 = 0.0;
        double delay = 0.0;
        double rise = 1e-12;
        double fall = 1e-12;
        double width = 0.0;
        double period = 0.0;  ///< 0 = single pulse
        bool operator==(const Pulse&) const = default;
    };

    Shape shape = Shape::Dc;
    double dc = 0.0;
    std::vector<std::pair<double, double>> pwl;  ///< (time, value), strictly increasing time
    Pulse pulse;

    static SourceWaveform constant(double value);
    static SourceWaveform piecewise(std::vector<std::pair<double, double>> points);
    static SourceWaveform pulsed(const Pulse& p);

    double value(double t) const;
    /// Corner times inside [0, tstop]; the integrator never steps across them.
    std::vector<double> breakpoints(double tstop) const;
    void validate() const;
    bool operator==(const SourceWaveform&) const = default;
};

struct Resistor {
    std::string name;
    NodeId a, b;
    double resistance;
};

struct Capacitor {
    std::string name;
    NodeId a, b;
    double capacitance;
};

/// Branch current unknown = current flowing into the + terminal through the source.
struct VoltageSource {
    std::string name;
    NodeId pos, neg;
    SourceWaveform wave;
    int branch = -1;
};

/// Positive value pulls current out of `pos` and pushes it into `neg`.
struct CurrentSource {
    std::string name;
    NodeId pos, neg;
    SourceWaveform wave;
};

struct Mosfet {
    std::string name;
    NodeId gate, drain, source;
    device::MosfetParams params;
};

struct Fefet {
    std::string name;
    NodeId gate, drain, source;
    device::FeFetParams params;
    device::FeFetState state;
};

using Device = std::variant<Resistor, Capacitor, VoltageSource, CurrentSource, Mosfet, Fefet>;

/// Elaborated node/device graph. Owns the mutable FeFET state slots.
class Circuit {
public:
    NodeId add_node(const std::string& name);
    /// Returns the existing id or kGround for "0"/"gnd"; throws if unknown.
    NodeId node(const std::string& name) const;
    bool has_node(const std::string& name) const;
    const std::string& node_name(NodeId id) const { return node_names_.at(static_cast<std::size_t>(id)); }
    int node_count() const noexcept { return static_cast<int>(node_names_.size()); }
    const std::vector<std::string>& node_names() const noexcept { return node_names_; }

    void add(Device device);

    int vsource_count() const noexcept { return vsource_count_; }
    int unknown_count() const noexcept { return node_count() + vsource_count_; }

    std::vector<Device>& devices() noexcept { return devices_; }
    const std::vector<Device>& devices() const noexcept { return devices_; }

    VoltageSource& vsource(const std::string& name);
    CurrentSource& isource(const std::string& name);
    Fefet& fefet(const std::string& name);
    const Fefet& fefet(const std::string& name) const;
    std::vector<std::string> vsource_names() const;
    std::vector<std::string> fefet_names() const;
    std::size_t fefet_count() const;

    /// Node voltages applied at t = 0 / held during the first DC solve.
    std::map<std::string, double> initial_conditions;
    std::vector<std::string> warnings;

    void validate() const;

private:
    std::vector<std::string> node_names_;
    std::map<std::string, NodeId> node_index_;
    std::vector<Device> devices_;
    int vsource_count_ = 0;
};

bool is_ground_name(const std::string& name);

}  // namespace fesram::engine
