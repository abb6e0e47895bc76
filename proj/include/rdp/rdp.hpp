#pragma once

#include "rdp/analytic.hpp"
#include "rdp/drp_solver.hpp"
#include "rdp/errors.hpp"
#include "rdp/io_json.hpp"
#include "rdp/prob.hpp"
#include "rdp/rdh.hpp"
#include "rdp/rdp_solver.hpp"
#include "rdp/transitions.hpp"
#include "rdp/transport.hpp"
