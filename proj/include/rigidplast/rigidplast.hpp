#pragma once

#include "rigidplast/benchmarks.hpp"
#include "rigidplast/commands.hpp"
#include "rigidplast/config.hpp"
#include "rigidplast/constitutive.hpp"
#include "rigidplast/error.hpp"
#include "rigidplast/evolution.hpp"
#include "rigidplast/fem.hpp"
#include "rigidplast/io.hpp"
#include "rigidplast/load_program.hpp"
#include "rigidplast/mesh.hpp"
#include "rigidplast/rigid_limit.hpp"
#include "rigidplast/safeload.hpp"
#include "rigidplast/sym_tensor.hpp"
