#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace trifun {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two diagonal entries are closer than the separation gate allows, so the
/// recursions' divisions are unsafe. Indices are 0-based.
class DegenerateSpectrum : public Error {
public:
    DegenerateSpectrum(int first, int second, double gap)
        : Error("degenerate spectrum: diagonal entries " + std::to_string(first) + " and " +
                std::to_string(second) + " are separated by only " + std::to_string(gap)),
          first_(first),
          second_(second),
          gap_(gap) {}

    int first() const { return first_; }
    int second() const { return second_; }
    double gap() const { return gap_; }

private:
    int first_;
    int second_;
    double gap_;
};

/// A dense input has an entry of modulus above zero_tol on the wrong side of
/// the diagonal. Carries the worst offender.
class NotTriangular : public Error {
public:
    NotTriangular(int row, int col, double magnitude)
        : Error("matrix is not triangular: entry (" + std::to_string(row) + ", " +
                std::to_string(col) + ") has modulus " + std::to_string(magnitude)),
          row_(row),
          col_(col),
          magnitude_(magnitude) {}

    int row() const { return row_; }
    int col() const { return col_; }
    double magnitude() const { return magnitude_; }

private:
    int row_;
    int col_;
    double magnitude_;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// An eigenvalue lies outside the domain of the scalar function being applied.
class DomainViolation : public Error {
public:
    DomainViolation(std::string function, int index, std::complex<double> eigenvalue)
        : Error("eigenvalue " + std::to_string(index) + " lies outside the domain of " + function),
          function_(std::move(function)),
          index_(index),
          eigenvalue_(eigenvalue) {}

    DomainViolation(std::string function, std::string message)
        : Error(std::move(message)), function_(std::move(function)), index_(-1), eigenvalue_(0.0) {}

    const std::string& function() const { return function_; }
    int index() const { return index_; }
    std::complex<double> eigenvalue() const { return eigenvalue_; }

private:
    std::string function_;
    int index_;
    std::complex<double> eigenvalue_;
};

/// A semigroup snapshot has a diagonal entry without a real logarithm.
class NonPositiveDiagonal : public Error {
public:
    NonPositiveDiagonal(int index, double value)
        : Error("snapshot diagonal entry " + std::to_string(index) + " = " + std::to_string(value) +
                " is not positive; no unique real generator"),
          index_(index),
          value_(value) {}

    int index() const { return index_; }
    double value() const { return value_; }

private:
    int index_;
    double value_;
};

/// A truncated series exhausted its term budget before meeting its tolerance.
class NotConverged : public Error {
public:
    explicit NotConverged(int terms)
        : Error("series did not converge within " + std::to_string(terms) + " terms"), terms_(terms) {}

    int terms() const { return terms_; }

private:
    int terms_;
};

class SpectralRadiusTooLarge : public Error {
public:
    explicit SpectralRadiusTooLarge(double bound)
        : Error("spectral radius bound " + std::to_string(bound) + " is not below 1"), bound_(bound) {}

    double bound() const { return bound_; }

private:
    double bound_;
};

/// A resolvent factor 1 + tau*a vanishes at a quadrature node.
class SingularResolvent : public Error {
public:
    SingularResolvent(double node, int index)
        : Error("resolvent is singular at quadrature node " + std::to_string(node) +
                " for diagonal entry " + std::to_string(index)),
          node_(node),
          index_(index) {}

    double node() const { return node_; }
    int index() const { return index_; }

private:
    double node_;
    int index_;
};

/// An eigenvalue lies on the logarithm's branch cut (-inf, -1] of A = P - 1.
class EigenvalueOnCut : public Error {
public:
    EigenvalueOnCut(int index, double value)
        : Error("eigenvalue " + std::to_string(index) + " of P - 1 lies at " + std::to_string(value) +
                " on the cut (-inf, -1]"),
          index_(index),
          value_(value) {}

    int index() const { return index_; }
    double value() const { return value_; }

private:
    int index_;
    double value_;
};

}  // namespace trifun
