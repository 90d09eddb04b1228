#pragma once

// Umbrella header.

#include "bltk/brascamp_lieb.hpp"
#include "bltk/calibration.hpp"
#include "bltk/configurations.hpp"
#include "bltk/ellipsoid.hpp"
#include "bltk/error.hpp"
#include "bltk/exterior.hpp"
#include "bltk/harness.hpp"
#include "bltk/integral_geometry.hpp"
#include "bltk/linalg.hpp"
#include "bltk/parallel.hpp"
#include "bltk/polynomial.hpp"
#include "bltk/rational.hpp"
#include "bltk/rng.hpp"
#include "bltk/visibility.hpp"
