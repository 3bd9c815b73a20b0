#pragma once

/// \file usfwi/usfwi.hpp
/// \brief Everything in one include.

#include "usfwi/core.hpp"
#include "usfwi/special.hpp"
#include "usfwi/quadrature.hpp"
#include "usfwi/grid.hpp"
#include "usfwi/schedule.hpp"
#include "usfwi/medium.hpp"
#include "usfwi/greens.hpp"
#include "usfwi/krylov.hpp"
#include "usfwi/forward.hpp"
#include "usfwi/sensitivity.hpp"
#include "usfwi/tv.hpp"
#include "usfwi/inversion.hpp"
#include "usfwi/phantoms.hpp"
#include "usfwi/metrics.hpp"
#include "usfwi/container.hpp"
#include "usfwi/config.hpp"
#include "usfwi/experiment.hpp"
#include "usfwi/render.hpp"
