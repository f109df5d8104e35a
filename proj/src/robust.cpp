// Copyright (c) 2026 The tdsc developers
// SPDX-License-Identifier: Apache-2.0
