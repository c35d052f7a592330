#pragma once

// Everything except the command-line layer.

#include "chronodg/analysis.hpp"
#include "chronodg/dg1.hpp"
#include "chronodg/dg2.hpp"
#include "chronodg/errors.hpp"
#include "chronodg/glm.hpp"
#include "chronodg/irk.hpp"
#include "chronodg/mu_polynomial.hpp"
#include "chronodg/newmark.hpp"
#include "chronodg/quadrature.hpp"
#include "chronodg/smallmat.hpp"
