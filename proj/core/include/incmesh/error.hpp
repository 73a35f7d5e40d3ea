#pragma once
#include <stdexcept>
#include <string>

namespace incmesh {

// Error taxonomy shared by library and CLI; the CLI maps these to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct DivergenceError : Error {
    using Error::Error;
};
struct CheckpointMismatchError : Error {
    using Error::Error;
};
struct AlreadyAllocatedError : Error {
    using Error::Error;
};
struct NotFoundError : Error {
    using Error::Error;
};
struct EmptyRenderError : Error {
    using Error::Error;
};
struct NoClassesError : Error {
    using Error::Error;
};
struct GenerationError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace incmesh
