#pragma once

#include <stdexcept>
#include <string>

namespace hsdiff {

// Error taxonomy shared by the library and the CLI. The CLI prints
// "error: <kind>: <message>" and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define HSDIFF_DEFINE_ERROR(Name, kind_str)                         \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& msg) : Error(kind_str, msg) {} \
    };

HSDIFF_DEFINE_ERROR(ShapeError, "shape")
HSDIFF_DEFINE_ERROR(DomainError, "domain")
HSDIFF_DEFINE_ERROR(ConfigError, "config")
HSDIFF_DEFINE_ERROR(DataError, "data")
HSDIFF_DEFINE_ERROR(FormatError, "format")
HSDIFF_DEFINE_ERROR(NumericalError, "numerical")
HSDIFF_DEFINE_ERROR(FeasibilityError, "feasibility")
HSDIFF_DEFINE_ERROR(GamutError, "gamut")
HSDIFF_DEFINE_ERROR(SamplingError, "sampling")
HSDIFF_DEFINE_ERROR(DivergenceError, "divergence")
HSDIFF_DEFINE_ERROR(EnsembleError, "ensemble")
HSDIFF_DEFINE_ERROR(MetricError, "metric")
HSDIFF_DEFINE_ERROR(IoError, "io")

#undef HSDIFF_DEFINE_ERROR

} // namespace hsdiff
