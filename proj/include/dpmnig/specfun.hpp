// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

namespace dpmnig::specfun {

// ln K_nu(x), modified Bessel function of the second kind, nu >= 0, x > 0.
//
// Orders reachable from the model are (d-1)/2, (d+1)/2, (d+3)/2 for data
// dimension d, i.e. half-integers for even d and integers for odd d; both
// families are evaluated through dedicated stable paths and any other real
// order falls back to quadrature of the cosh integral representation.
// Negative orders are the caller's job via the reflection K_{-nu} = K_nu.
//
// Throws std::domain_error for x <= 0, nu < 0 or non-finite inputs.
double log_bessel_k(double nu, double x);

}  // namespace dpmnig::specfun
