#pragma once

#include "qfa/analysis.hpp"
#include "qfa/config.hpp"
#include "qfa/errors.hpp"
#include "qfa/experiments.hpp"
#include "qfa/interconnect.hpp"
#include "qfa/models.hpp"
#include "qfa/poly.hpp"
#include "qfa/rational.hpp"
#include "qfa/rational_matrix.hpp"
#include "qfa/serialize.hpp"
#include "qfa/version.hpp"
