#pragma once

// Lower bounds for ratios whose constants are only known up to dimension-
// dependent factors. Each value is half the minimum that tools/calibrate.cpp
// observed over 1000 seeded instances (seeds from 1000000), rounded down.

namespace bltk {

// (ordered wedge tuple sum) / Vis over fields with V >= 1; 0 where uncalibrated.
inline double wedge_ratio_floor(int d) {
  switch (d) {
    case 1: return 1.0;
    case 2: return 0.72;
    case 3: return 0.174;
    default: return 0.0;
  }
}

// primal / (BL^-tau Vis^tau) for orthogonal projection data.
inline double bl_primal_floor(int d) {
  switch (d) {
    case 2: return 1.10;
    case 3: return 1.92;
    default: return 0.0;
  }
}

// dual / (BL^-tau Vis^(n - tau)) for the same data.
inline double bl_dual_floor(int d) {
  switch (d) {
    case 2: return 1.24;
    case 3: return 1.79;
    default: return 0.0;
  }
}

}  // namespace bltk
