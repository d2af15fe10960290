#pragma once

#include "pathtrace/common.hpp"
#include "pathtrace/problem.hpp"
#include "pathtrace/problems.hpp"
#include "pathtrace/fem1d.hpp"
#include "pathtrace/bordered.hpp"
#include "pathtrace/trace.hpp"
#include "pathtrace/stepper.hpp"
#include "pathtrace/deflation.hpp"
#include "pathtrace/robust.hpp"
#include "pathtrace/config.hpp"
#include "pathtrace/output.hpp"
#include "pathtrace/run.hpp"
