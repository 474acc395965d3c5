#pragma once

#include "levy.hpp"
#include "random.hpp"
#include "path.hpp"
#include "lamperti.hpp"
#include "switching.hpp"
#include "cellsystem.hpp"
#include "bifurcator.hpp"
#include "bblp.hpp"
#include "stats.hpp"
#include "parallel.hpp"
#include "verify.hpp"
#include "io.hpp"
#include "app.hpp"
