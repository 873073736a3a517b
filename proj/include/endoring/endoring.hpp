#pragma once

#include <endoring/rational.hpp>
#include <endoring/quat.hpp>
#include <endoring/lattice.hpp>
#include <endoring/order.hpp>
#include <endoring/padic.hpp>
#include <endoring/btt.hpp>
#include <endoring/divide.hpp>
#include <endoring/pipeline.hpp>
#include <endoring/io.hpp>
