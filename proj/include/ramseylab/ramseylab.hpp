#pragma once

#include "ramseylab/decoherence.hpp"
#include "ramseylab/dispersive.hpp"
#include "ramseylab/errors.hpp"
#include "ramseylab/fock.hpp"
#include "ramseylab/jc.hpp"
#include "ramseylab/linear_optics.hpp"
#include "ramseylab/multi_atom.hpp"
#include "ramseylab/ramsey.hpp"
#include "ramseylab/scenario.hpp"
#include "ramseylab/version.hpp"
