#pragma once

// Umbrella header: divergences between continuous-martingale laws, optimal
// win-martingale construction, and the associated verification toolkit.

#include "specwass/core.hpp"
#include "specwass/divergence.hpp"
#include "specwass/math.hpp"
#include "specwass/parallel.hpp"
#include "specwass/profile.hpp"
#include "specwass/report.hpp"
#include "specwass/rng.hpp"
#include "specwass/schrodinger.hpp"
#include "specwass/sde.hpp"
#include "specwass/wasserstein.hpp"
#include "specwass/winmart.hpp"
