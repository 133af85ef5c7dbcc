#pragma once

#include <stdexcept>
#include <string>

namespace toda {

// Error categories map to CLI exit codes: precondition -> 2, io -> 3.
enum class errc { precondition, io };

struct Error : std::runtime_error {
    errc code;
    Error(errc c, const std::string& m) : std::runtime_error(m), code(c) {}
};

struct NearZeroOnCircle : Error {
    explicit NearZeroOnCircle(const std::string& m = "curve passes too close to zero on the circle")
        : Error(errc::precondition, m) {}
};

struct NotInM1 : Error {
    explicit NotInM1(const std::string& m = "point does not satisfy the winding conditions (M1)")
        : Error(errc::precondition, m) {}
};

struct NotInM0 : Error {
    explicit NotInM0(const std::string& m = "point is not in M0")
        : Error(errc::precondition, m) {}
};

struct DegenerateLeadingCoefficient : Error {
    explicit DegenerateLeadingCoefficient(const std::string& m = "leading coefficient of lambdabar vanishes")
        : Error(errc::precondition, m) {}
};

struct OutOfDomain : Error {
    explicit OutOfDomain(const std::string& m = "argument out of domain")
        : Error(errc::precondition, m) {}
};

struct ZetaOutOfDisc : Error {
    explicit ZetaOutOfDisc(const std::string& m = "deformation parameter outside the configured disc")
        : Error(errc::precondition, m) {}
};

struct LeftManifold : Error {
    explicit LeftManifold(const std::string& m = "integration left the manifold")
        : Error(errc::precondition, m) {}
};

struct TailBlowup : Error {
    explicit TailBlowup(const std::string& m = "truncation tail exceeded threshold")
        : Error(errc::precondition, m) {}
};

struct FactorizationResidualTooLarge : Error {
    explicit FactorizationResidualTooLarge(const std::string& m = "factorization residual too large; enlarge the window")
        : Error(errc::precondition, m) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(errc::io, m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error(errc::io, m) {}
};

}  // namespace toda
