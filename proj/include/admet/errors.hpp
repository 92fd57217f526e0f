#pragma once

#include <stdexcept>
#include <string>

namespace admet {

// All domain errors carry a stable machine-readable name alongside the
// human-readable message; the CLI prints the name on failure.
class NamedError : public std::runtime_error {
public:
    NamedError(std::string name, const std::string& msg)
        : std::runtime_error(name + ": " + msg), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

#define ADMET_DEFINE_ERROR(NAME)                                        \
    class NAME : public NamedError {                                    \
    public:                                                             \
        explicit NAME(const std::string& msg) : NamedError(#NAME, msg) {} \
    }

// molgraph
ADMET_DEFINE_ERROR(UnclosedRing);
ADMET_DEFINE_ERROR(UnbalancedParen);
ADMET_DEFINE_ERROR(UnknownAtomSymbol);
ADMET_DEFINE_ERROR(ValenceViolation);
ADMET_DEFINE_ERROR(MultiComponentUnsupported);

// tensor
ADMET_DEFINE_ERROR(ShapeMismatch);
ADMET_DEFINE_ERROR(NonContiguousSegments);
ADMET_DEFINE_ERROR(NonScalarRoot);

// models
ADMET_DEFINE_ERROR(SchemaMismatch);
ADMET_DEFINE_ERROR(DegenerateValidation);
ADMET_DEFINE_ERROR(DegenerateTarget);
ADMET_DEFINE_ERROR(EmptyInput);

// evaluation
ADMET_DEFINE_ERROR(MissingColumn);
ADMET_DEFINE_ERROR(EmptyDataset);
ADMET_DEFINE_ERROR(DuplicateRecord);
ADMET_DEFINE_ERROR(EmptyPartition);
ADMET_DEFINE_ERROR(DegenerateSeries);
ADMET_DEFINE_ERROR(InsufficientN);

// interpretation
ADMET_DEFINE_ERROR(SizeOutOfRange);
ADMET_DEFINE_ERROR(ExactModeLimitExceeded);

// cli
ADMET_DEFINE_ERROR(ConfigError);

#undef ADMET_DEFINE_ERROR

}  // namespace admet
