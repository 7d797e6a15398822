// SPDX-License-Identifier: Apache-2.0
//
// dloc  C++ library for direct localization of underwater acoustic sources
// Copyright (C) 2026 The dloc authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef DLOC_DATASET_HPP
#define DLOC_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dloc/propagation.hpp"

namespace dloc
{
    // Record container file. Layout, all little-endian:
    //   magic "DLC1" | version u32 | L u32 | N u32 | count u64 | flags u32
    // then per record:
    //   snr_db f64 | label x,y,z f64 | L*N complex samples, receiver-major,
    //   interleaved (re, im) f64.
    // Ground-truth nuisance quantities (attenuations, spectra) are not
    // stored; records read back from a file cannot drive oracle estimators.

    inline constexpr std::uint32_t kDatasetVersion = 1;
    inline constexpr std::uint32_t kDatasetFlagDynamic = 1u << 0;

    struct DatasetHeader
    {
        std::uint32_t version = kDatasetVersion;
        std::uint32_t L = 0;
        std::uint32_t N = 0;
        std::uint64_t count = 0;
        std::uint32_t flags = 0;
    };

    struct StoredRecord
    {
        double snr_db = 0.0;
        CartesianPosition label;
        Eigen::MatrixXcd samples; // N x L, receiver per column
    };

    class DatasetWriter
    {
    public:
        DatasetWriter(const std::string &path, int L, int N, std::uint32_t flags);
        ~DatasetWriter();
        DatasetWriter(const DatasetWriter &) = delete;
        DatasetWriter &operator=(const DatasetWriter &) = delete;

        void append(double snr_db, const SignalRecord &rec);
        // finalizes the record count in the header
        void close();

        static std::uint64_t file_size_for(int L, int N, std::uint64_t count);

    private:
        std::FILE *f_ = nullptr;
        DatasetHeader hdr_;
    };

    DatasetHeader read_dataset_header(const std::string &path);
    std::vector<StoredRecord> read_dataset(const std::string &path, DatasetHeader *hdr = nullptr);
    StoredRecord read_dataset_record(const std::string &path, std::uint64_t index,
                                     DatasetHeader *hdr = nullptr);

} // namespace dloc

#endif
