#pragma once

#include <gtest/gtest.h>

#include "wsob/error.hpp"

// Expects `stmt` to throw wsob::Error with the given code.
#define EXPECT_WSOB_ERROR(stmt, expected_code)                                     \
    do {                                                                           \
        try {                                                                      \
            stmt;                                                                  \
            ADD_FAILURE() << "no exception from " #stmt;                           \
        } catch (const wsob::Error& e) {                                           \
            EXPECT_EQ(e.code(), wsob::ErrorCode::expected_code) << e.what();       \
        }                                                                          \
    } while (0)
