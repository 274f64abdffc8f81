#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dropin {

// Error categories map 1:1 onto CLI exit codes: config=2, data=3, numeric=4.
enum class ErrorCategory { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, std::string name, const std::string& msg)
        : std::runtime_error(name + ": " + msg), category_(cat), name_(std::move(name)) {}

    ErrorCategory category() const noexcept { return category_; }
    const std::string& name() const noexcept { return name_; }

private:
    ErrorCategory category_;
    std::string name_;
};

#define DROPIN_ERROR(Name, Cat)                                        \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& msg)                          \
            : Error(ErrorCategory::Cat, #Name, msg) {}                 \
    }

// config / usage
DROPIN_ERROR(InvalidHyperparameter, config);
DROPIN_ERROR(InvalidLeak, config);
DROPIN_ERROR(InvalidParameters, config);
DROPIN_ERROR(DimensionMismatch, config);
DROPIN_ERROR(KTooLarge, config);
DROPIN_ERROR(InvalidFeatureIndex, config);
DROPIN_ERROR(SchemaMismatch, config);

// data
DROPIN_ERROR(ParseError, data);
DROPIN_ERROR(MissingTargetEntry, data);
DROPIN_ERROR(LabelOutOfDomain, data);
DROPIN_ERROR(InconsistentFeatureCount, data);
DROPIN_ERROR(EmptyDataset, data);
DROPIN_ERROR(EmptySequence, data);
DROPIN_ERROR(EmptyInput, data);
DROPIN_ERROR(DatasetTooSmall, data);

// numeric
DROPIN_ERROR(NoConvergence, numeric);
DROPIN_ERROR(RescaleInfeasible, numeric);
DROPIN_ERROR(NumericalBreakdown, numeric);
DROPIN_ERROR(SingularSystem, numeric);

#undef DROPIN_ERROR

}  // namespace dropin
