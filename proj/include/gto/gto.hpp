#pragma once

#include "gto/error.hpp"
#include "gto/graph_core.hpp"
#include "gto/graph_learn.hpp"
#include "gto/entropy.hpp"
#include "gto/dct.hpp"
#include "gto/image.hpp"
#include "gto/parallel.hpp"
#include "gto/codec.hpp"
#include "gto/config.hpp"
#include "gto/eval.hpp"
