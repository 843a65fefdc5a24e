#pragma once

#include <stdexcept>
#include <string>

namespace dyn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define DYN_ERROR(Name)                                   \
    struct Name : Error {                                 \
        explicit Name(const std::string& what)            \
            : Error(std::string(#Name ": ") + what) {}    \
    }

DYN_ERROR(PointOutsideDomain);
DYN_ERROR(StepTooLarge);
DYN_ERROR(OddDimension);
DYN_ERROR(NoConvergence);
DYN_ERROR(SingularJacobian);
DYN_ERROR(NotHyperbolic);
DYN_ERROR(NotInvertible);
DYN_ERROR(NoMetadata);
DYN_ERROR(LambdaOutOfRange);
DYN_ERROR(StepLimit);
DYN_ERROR(PreconditionError);
DYN_ERROR(NotFixedPoint);
DYN_ERROR(DomainOverflow);
DYN_ERROR(IntegratorDiverged);
DYN_ERROR(NoChain);
DYN_ERROR(HorizonExhausted);
DYN_ERROR(DominationViolated);
DYN_ERROR(RectanglesOverlap);
DYN_ERROR(VectorTooLarge);
DYN_ERROR(ScheduleTooSmall);
DYN_ERROR(DepthExhausted);
DYN_ERROR(BudgetExhausted);
DYN_ERROR(InfeasibleParameters);
DYN_ERROR(ConfigInvalid);

#undef DYN_ERROR

// Raised when some cell of a region is not inside any generator image.
struct Uncovered : Error {
    explicit Uncovered(const std::string& what, double at = 0.0)
        : Error("Uncovered: " + what), witness(at) {}
    double witness;  // first coordinate of the witness cell center
};

}  // namespace dyn
