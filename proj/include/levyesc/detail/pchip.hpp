#pragma once

// boost's pchip calls isnan unqualified; make the std overloads visible first.
#include <cmath>
using std::isnan;  // NOLINT(google-global-names-in-headers)
#include <boost/math/interpolators/pchip.hpp>
