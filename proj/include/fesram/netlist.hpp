#pragma once

// SPICE-subset netlist front end. The grammar is documented in docs/netlist.md.
//
// Element letter F is a FeFET here, not the classic SPICE current-controlled
// current source.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fesram/circuit.hpp"
#include "fesram/device.hpp"

namespace fesram::netlist {

/// Parses a number with an optional SI suffix (f p n u m k meg g, case-insensitive).
/// Returns nullopt on malformed input; `bad_suffix` receives the offending suffix.
std::optional<double> parse_si(std::string_view token, std::string* bad_suffix = nullptr);

/// Formats a value so that parse_si reads back the identical double.
std::string format_number(double value);

enum class ElementKind { Resistor, Capacitor, VSource, ISource, Mosfet, Fefet };

struct PolarizationTag {
    enum class Kind { None, Lvt, Hvt, List };
    Kind kind = Kind::None;
    std::vector<double> values;
    bool operator==(const PolarizationTag&) const = default;
};

struct Element {
    ElementKind kind = ElementKind::Resistor;
    std::string name;                ///< lower-cased
    std::vector<std::string> nodes;  ///< R/C/V/I: (a, b); M/F: (gate, drain, source)
    double value = 0.0;              ///< R/C
    engine::SourceWaveform source;   ///< V/I
    std::string model;               ///< M/F
    PolarizationTag polarization;    ///< F
    int line = 0;

    bool operator==(const Element& o) const {
        return kind == o.kind && name == o.name && nodes == o.nodes && value == o.value && source == o.source &&
               model == o.model && polarization == o.polarization;
    }
};

struct ModelCard {
    std::string name;
    std::string type;  ///< nmos, pmos, nfefet, pfefet
    std::map<std::string, double> params;
    std::map<std::string, std::string> options;  ///< non-numeric parameters (e.g. profile=junction)
    int line = 0;

    bool operator==(const ModelCard& o) const {
        return name == o.name && type == o.type && params == o.params && options == o.options;
    }
};

struct AnalysisDirective {
    enum class Kind { Tran, Dc, Op, Ic };
    Kind kind = Kind::Op;
    double dtmax = 0.0;
    double tstop = 0.0;
    std::string source;
    double start = 0.0, stop = 0.0, step = 0.0;
    std::vector<std::pair<std::string, double>> initial;  ///< .ic v(node)=value
    int line = 0;

    bool operator==(const AnalysisDirective& o) const {
        return kind == o.kind && dtmax == o.dtmax && tstop == o.tstop && source == o.source && start == o.start &&
               stop == o.stop && step == o.step && initial == o.initial;
    }
};

struct Netlist {
    std::string title;
    std::vector<Element> elements;
    std::vector<ModelCard> models;
    std::vector<AnalysisDirective> directives;

    bool operator==(const Netlist&) const = default;
};

Netlist parse(std::string_view text);
std::string unparse(const Netlist& netlist);

/// Device parameter records keyed by model name (lower-case).
struct ModelLibrary {
    std::map<std::string, device::MosfetParams> mosfets;
    std::map<std::string, device::FeFetParams> fefets;
    std::map<std::string, std::size_t> fefet_segments;  ///< from the card's segments= key

    /// Adds every .model card of a netlist, on top of existing entries.
    void add_cards(const std::vector<ModelCard>& cards);
};

struct Elaborated {
    engine::Circuit circuit;
    std::vector<AnalysisDirective> plan;  ///< .tran / .dc / .op in source order
};

Elaborated elaborate(const Netlist& netlist, const ModelLibrary& models);

}  // namespace fesram::netlist
