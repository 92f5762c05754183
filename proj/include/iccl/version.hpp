#pragma once

#define ICCL_VERSION "0.1.0"
