#ifndef DCL_SPECIALFN_HPP
#define DCL_SPECIALFN_HPP

namespace dcl::special {

/// Natural log of the gamma function for finite x > 0.
/// Throws std::domain_error outside that domain.
double lgamma(double x);

/// psi(x) = d/dx ln Gamma(x) for finite x > 0.
double digamma(double x);

/// psi'(x), used as the local derivative of digamma on the tape.
double trigamma(double x);

}  // namespace dcl::special

#endif  // DCL_SPECIALFN_HPP
