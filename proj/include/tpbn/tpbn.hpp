#pragma once

#include "tpbn/errors.hpp"
#include "tpbn/gibbs.hpp"
#include "tpbn/gig.hpp"
#include "tpbn/lasso.hpp"
#include "tpbn/map_em.hpp"
#include "tpbn/model.hpp"
#include "tpbn/random.hpp"
#include "tpbn/report.hpp"
#include "tpbn/simulation.hpp"
#include "tpbn/specfun.hpp"
#include "tpbn/tpb.hpp"
#include "tpbn/varbayes.hpp"
