#pragma once

#include "qsctl/base.hpp"
#include "qsctl/cbs.hpp"
#include "qsctl/charsets.hpp"
#include "qsctl/fixpoint.hpp"
#include "qsctl/formula.hpp"
#include "qsctl/guard.hpp"
#include "qsctl/model.hpp"
#include "qsctl/rgraph.hpp"
