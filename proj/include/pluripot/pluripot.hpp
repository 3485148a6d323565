#pragma once

// Convenience umbrella: the whole library in dependency order.

#include "pluripot/errors.hpp"
#include "pluripot/lattice.hpp"
#include "pluripot/domains.hpp"
#include "pluripot/mask.hpp"
#include "pluripot/gridfn.hpp"
#include "pluripot/cone.hpp"
#include "pluripot/pshcore.hpp"
#include "pluripot/envelope.hpp"
#include "pluripot/simplex.hpp"
#include "pluripot/jensen.hpp"
#include "pluripot/hyperconvex.hpp"
#include "pluripot/glue.hpp"
#include "pluripot/report.hpp"
#include "pluripot/experiments.hpp"
