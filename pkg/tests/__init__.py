# SPDX-FileCopyrightText: 2023-present William T Olson <trevor@hiringsolved.com>
#
# SPDX-License-Identifier: MIT
