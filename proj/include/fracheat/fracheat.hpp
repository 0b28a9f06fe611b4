#pragma once

#include "fracheat/cli.hpp"
#include "fracheat/config.hpp"
#include "fracheat/density.hpp"
#include "fracheat/fbm.hpp"
#include "fracheat/malliavin.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/quadrature.hpp"
#include "fracheat/report.hpp"
#include "fracheat/rng.hpp"
#include "fracheat/solver.hpp"
#include "fracheat/spectral_field.hpp"
#include "fracheat/version.hpp"
#include "fracheat/young.hpp"
