#pragma once

#include "fracdg/analysis.hpp"
#include "fracdg/errors.hpp"
#include "fracdg/flux.hpp"
#include "fracdg/fractional.hpp"
#include "fracdg/io.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/projections.hpp"
#include "fracdg/quadrature.hpp"
#include "fracdg/reference.hpp"
#include "fracdg/reference_grid.hpp"
#include "fracdg/runner.hpp"
#include "fracdg/scheme.hpp"
