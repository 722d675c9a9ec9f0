#ifndef SPECPERTURB_SPECPERTURB_HPP
#define SPECPERTURB_SPECPERTURB_HPP

#include "specperturb/affinity.hpp"
#include "specperturb/bounds.hpp"
#include "specperturb/completion.hpp"
#include "specperturb/embedding.hpp"
#include "specperturb/error.hpp"
#include "specperturb/experiments.hpp"
#include "specperturb/io.hpp"
#include "specperturb/numkernel.hpp"
#include "specperturb/sensing.hpp"
#include "specperturb/subspace.hpp"
#include "specperturb/synthgen.hpp"

#endif  // SPECPERTURB_SPECPERTURB_HPP
