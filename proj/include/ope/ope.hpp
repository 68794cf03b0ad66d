#pragma once

/// Umbrella header: pulls in the whole off-policy evaluation toolkit.

#include "ope/domains.hpp"
#include "ope/doubly_robust.hpp"
#include "ope/errors.hpp"
#include "ope/experiment.hpp"
#include "ope/importance.hpp"
#include "ope/magic.hpp"
#include "ope/mdp.hpp"
#include "ope/mdp_json.hpp"
#include "ope/model.hpp"
#include "ope/rng.hpp"
#include "ope/simplex_qp.hpp"
