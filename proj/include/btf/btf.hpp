#ifndef BTF_BTF_HPP
#define BTF_BTF_HPP

#include "btf/bootstrap.hpp"
#include "btf/errors.hpp"
#include "btf/etm.hpp"
#include "btf/fft.hpp"
#include "btf/hom_trivium.hpp"
#include "btf/lwe.hpp"
#include "btf/params.hpp"
#include "btf/protocol.hpp"
#include "btf/report.hpp"
#include "btf/rng.hpp"
#include "btf/serial.hpp"
#include "btf/torus.hpp"
#include "btf/trivium.hpp"
#include "btf/wire.hpp"

#endif
