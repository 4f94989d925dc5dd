#pragma once

#include "walkmax/benchdata.hpp"
#include "walkmax/complexops.hpp"
#include "walkmax/config.hpp"
#include "walkmax/contours.hpp"
#include "walkmax/engine.hpp"
#include "walkmax/errors.hpp"
#include "walkmax/models.hpp"
#include "walkmax/oracle.hpp"
#include "walkmax/report.hpp"
#include "walkmax/valuation.hpp"
#include "walkmax/wiener_hopf.hpp"
#include "walkmax/zinv.hpp"
