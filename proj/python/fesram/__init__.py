"""Python bindings for the fesram cell simulator."""

from ._fesram import (  # noqa: F401
    DomainError,
    Error,
    ExtractionError,
    ParseError,
    SolverError,
    __version__,
    butterfly,
    disturb_projection,
    format_netlist,
    halid,
    monte_carlo_yield,
    power_cycle,
    read_latency,
    simulate,
)
