#pragma once

#include "kgap/error.hpp"
#include "kgap/rng.hpp"
#include "kgap/linalg.hpp"
#include "kgap/grid.hpp"
#include "kgap/trig_series.hpp"
#include "kgap/metric.hpp"
#include "kgap/functionals.hpp"
#include "kgap/hypothesis.hpp"
#include "kgap/gmres.hpp"
#include "kgap/monge_ampere.hpp"
#include "kgap/probes.hpp"
#include "kgap/audit.hpp"
#include "kgap/field_io.hpp"
#include "kgap/config.hpp"
#include "kgap/svg.hpp"
#include "kgap/run.hpp"
