#pragma once

#include <stdexcept>
#include <string>

namespace chronodg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define CHRONODG_ERROR(Name)                          \
    struct Name : Error {                             \
        explicit Name(const std::string& what_arg)    \
            : Error(#Name ": " + what_arg) {}         \
    }

CHRONODG_ERROR(InvalidArgument);
CHRONODG_ERROR(SingularMatrix);
CHRONODG_ERROR(Defective);
CHRONODG_ERROR(DegenerateStep);
CHRONODG_ERROR(SingularStageSystem);
CHRONODG_ERROR(Unsupported);
CHRONODG_ERROR(PoleHit);
CHRONODG_ERROR(SingularImplicitBlock);
CHRONODG_ERROR(ZeroAlphaZero);
CHRONODG_ERROR(SingularSlab);
CHRONODG_ERROR(ModeUnavailable);
CHRONODG_ERROR(SingularK);
CHRONODG_ERROR(DuplicateNodes);
CHRONODG_ERROR(NonPositiveError);
CHRONODG_ERROR(UnstableRun);

#undef CHRONODG_ERROR

}  // namespace chronodg
