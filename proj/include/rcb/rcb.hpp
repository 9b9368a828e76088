#pragma once

#include "rcb/galois_field.hpp"
#include "rcb/block_vector.hpp"
#include "rcb/precode.hpp"
#include "rcb/degree_distribution.hpp"
#include "rcb/lt_code.hpp"
#include "rcb/digest.hpp"
#include "rcb/ledger.hpp"
#include "rcb/rng.hpp"
#include "rcb/events.hpp"
#include "rcb/node_protocol.hpp"
#include "rcb/skellam.hpp"
#include "rcb/failure_table.hpp"
#include "rcb/metrics.hpp"
#include "rcb/scenario.hpp"
