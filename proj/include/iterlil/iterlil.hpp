#pragma once

#include "iterlil/branching.hpp"
#include "iterlil/error.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"
#include "iterlil/lil.hpp"
#include "iterlil/path.hpp"
#include "iterlil/renewal.hpp"
#include "iterlil/rng.hpp"
#include "iterlil/stats.hpp"
