#pragma once

#include "cachenet/bounds.hpp"
#include "cachenet/core.hpp"
#include "cachenet/delivery.hpp"
#include "cachenet/demand.hpp"
#include "cachenet/errors.hpp"
#include "cachenet/lp.hpp"
#include "cachenet/messages.hpp"
#include "cachenet/placement.hpp"
#include "cachenet/scenario.hpp"
