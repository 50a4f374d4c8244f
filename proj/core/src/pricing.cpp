#include "kyle/pricing.hpp"
