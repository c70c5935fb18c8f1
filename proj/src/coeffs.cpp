#include "conewarp/coeffs.hpp"

// Header-only kernel; this TU anchors the target.
