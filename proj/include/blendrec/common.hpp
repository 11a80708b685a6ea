#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace blendrec {

using Index = Eigen::Index;

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

inline double clamp_rating(double x)
{
    return x < kMinRating ? kMinRating : (x > kMaxRating ? kMaxRating : x);
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class MissingInput : public Error {
public:
    using Error::Error;
};

// Stream seeds are derived from a base seed plus a component name and index,
// so that every independently scheduled unit of work owns its own RNG.
std::uint64_t derive_seed(std::uint64_t base, std::string_view component,
                          std::uint64_t index = 0);
std::uint64_t derive_seed(std::uint64_t base, std::string_view component,
                          std::uint64_t index, std::uint64_t sub_index);

// FNV-1a, used for seed derivation and provenance digests.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

std::string hex_digest(std::uint64_t h);

} // namespace blendrec
