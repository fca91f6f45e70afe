#pragma once

// Single place to configure cpp-httplib before inclusion.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
