#pragma once

#include <stdexcept>
#include <string>

namespace chebnet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define CHEBNET_ERROR(Name)                          \
    struct Name : Error {                            \
        using Error::Error;                          \
        Name() : Error(#Name) {}                     \
    }

CHEBNET_ERROR(DomainViolation);
CHEBNET_ERROR(NonFinite);
CHEBNET_ERROR(DegenerateTangent);
CHEBNET_ERROR(StencilOutOfDomain);
CHEBNET_ERROR(ParamOutOfRange);
CHEBNET_ERROR(BranchViolation);
CHEBNET_ERROR(DegeneratePair);
CHEBNET_ERROR(SingularNet);
CHEBNET_ERROR(BadParams);
CHEBNET_ERROR(DomainEmpty);
CHEBNET_ERROR(OutsideGaussImage);
CHEBNET_ERROR(NewtonDiverged);
CHEBNET_ERROR(DerivativeSingular);
CHEBNET_ERROR(NoOverlap);
CHEBNET_ERROR(DegenerateEigen);
CHEBNET_ERROR(GenericityViolation);
CHEBNET_ERROR(CuspidalPoint);
CHEBNET_ERROR(DegenerateSigns);
CHEBNET_ERROR(LeftDomain);
CHEBNET_ERROR(CommutationDefect);
CHEBNET_ERROR(ClosednessViolation);
CHEBNET_ERROR(CompatibilityViolation);
CHEBNET_ERROR(MaskedRegion);
CHEBNET_ERROR(IoError);
CHEBNET_ERROR(EmptyObject);

#undef CHEBNET_ERROR

}  // namespace chebnet
