#pragma once

#include "digraph.hpp"
#include "embeddings.hpp"
#include "errors.hpp"
#include "foliation.hpp"
#include "geodesics.hpp"
#include "geometry.hpp"
#include "kernel.hpp"
#include "linalg.hpp"
#include "lumping.hpp"
#include "optimize.hpp"
#include "projections.hpp"
#include "random.hpp"
#include "version.hpp"
