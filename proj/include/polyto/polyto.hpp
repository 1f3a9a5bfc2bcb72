#pragma once

#include "polyto/constraints.hpp"
#include "polyto/driver.hpp"
#include "polyto/error.hpp"
#include "polyto/fea.hpp"
#include "polyto/geometry.hpp"
#include "polyto/io.hpp"
#include "polyto/mma.hpp"
#include "polyto/sensitivity.hpp"
