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

#include "dloc/dataset.hpp"

#include <cstring>
#include <stdexcept>

namespace dloc
{
    namespace
    {
        constexpr std::uint64_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 4;

        void put_u32(std::FILE *f, std::uint32_t v)
        {
            unsigned char b[4];
            for (int i = 0; i < 4; ++i)
                b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
            if (std::fwrite(b, 1, 4, f) != 4)
                throw std::runtime_error("dataset write failed");
        }

        void put_u64(std::FILE *f, std::uint64_t v)
        {
            unsigned char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
            if (std::fwrite(b, 1, 8, f) != 8)
                throw std::runtime_error("dataset write failed");
        }

        void put_f64(std::FILE *f, double d)
        {
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            put_u64(f, bits);
        }

        std::uint32_t get_u32(std::FILE *f)
        {
            unsigned char b[4];
            if (std::fread(b, 1, 4, f) != 4)
                throw std::runtime_error("dataset truncated");
            std::uint32_t v = 0;
            for (int i = 0; i < 4; ++i)
                v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
            return v;
        }

        std::uint64_t get_u64(std::FILE *f)
        {
            unsigned char b[8];
            if (std::fread(b, 1, 8, f) != 8)
                throw std::runtime_error("dataset truncated");
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i)
                v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
            return v;
        }

        double get_f64(std::FILE *f)
        {
            const std::uint64_t bits = get_u64(f);
            double d;
            std::memcpy(&d, &bits, 8);
            return d;
        }

        std::uint64_t record_bytes(int L, int N)
        {
            return 8 + 3 * 8 + static_cast<std::uint64_t>(L) * N * 16;
        }

        DatasetHeader read_header(std::FILE *f)
        {
            char magic[4];
            if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "DLC1", 4) != 0)
                throw std::runtime_error("not a DLC1 dataset");
            DatasetHeader h;
            h.version = get_u32(f);
            if (h.version != kDatasetVersion)
                throw std::runtime_error("unsupported dataset version");
            h.L = get_u32(f);
            h.N = get_u32(f);
            h.count = get_u64(f);
            h.flags = get_u32(f);
            return h;
        }

        StoredRecord read_record(std::FILE *f, int L, int N)
        {
            StoredRecord r;
            r.snr_db = get_f64(f);
            r.label.x = get_f64(f);
            r.label.y = get_f64(f);
            r.label.z = get_f64(f);
            r.samples.resize(N, L);
            std::vector<double> buf(static_cast<size_t>(L) * N * 2);
            if (std::fread(buf.data(), sizeof(double), buf.size(), f) != buf.size())
                throw std::runtime_error("dataset truncated");
            size_t i = 0;
            for (int l = 0; l < L; ++l)
                for (int n = 0; n < N; ++n, i += 2)
                    r.samples(n, l) = std::complex<double>(buf[i], buf[i + 1]);
            return r;
        }
    } // namespace

    DatasetWriter::DatasetWriter(const std::string &path, int L, int N, std::uint32_t flags)
    {
        f_ = std::fopen(path.c_str(), "wb");
        if (!f_)
            throw std::runtime_error("cannot write dataset: " + path);
        hdr_.L = static_cast<std::uint32_t>(L);
        hdr_.N = static_cast<std::uint32_t>(N);
        hdr_.flags = flags;
        if (std::fwrite("DLC1", 1, 4, f_) != 4)
            throw std::runtime_error("dataset write failed");
        put_u32(f_, hdr_.version);
        put_u32(f_, hdr_.L);
        put_u32(f_, hdr_.N);
        put_u64(f_, 0); // patched on close
        put_u32(f_, hdr_.flags);
    }

    DatasetWriter::~DatasetWriter()
    {
        if (f_)
        {
            try
            {
                close();
            }
            catch (...)
            {
            }
        }
    }

    void DatasetWriter::append(double snr_db, const SignalRecord &rec)
    {
        if (!f_)
            throw std::runtime_error("dataset writer already closed");
        const int L = static_cast<int>(hdr_.L);
        const int N = static_cast<int>(hdr_.N);
        if (rec.receivers() != L || rec.samples_per_receiver() != N)
            throw std::invalid_argument("record shape does not match dataset header");

        put_f64(f_, snr_db);
        put_f64(f_, rec.label.x);
        put_f64(f_, rec.label.y);
        put_f64(f_, rec.label.z);
        std::vector<double> buf(static_cast<size_t>(L) * N * 2);
        size_t i = 0;
        for (int l = 0; l < L; ++l)
            for (int n = 0; n < N; ++n, i += 2)
            {
                buf[i] = rec.samples(n, l).real();
                buf[i + 1] = rec.samples(n, l).imag();
            }
        if (std::fwrite(buf.data(), sizeof(double), buf.size(), f_) != buf.size())
            throw std::runtime_error("dataset write failed");
        ++hdr_.count;
    }

    void DatasetWriter::close()
    {
        if (!f_)
            return;
        std::fseek(f_, 4 + 4 + 4 + 4, SEEK_SET);
        put_u64(f_, hdr_.count);
        std::fclose(f_);
        f_ = nullptr;
    }

    std::uint64_t DatasetWriter::file_size_for(int L, int N, std::uint64_t count)
    {
        return kHeaderBytes + count * record_bytes(L, N);
    }

    DatasetHeader read_dataset_header(const std::string &path)
    {
        std::FILE *f = std::fopen(path.c_str(), "rb");
        if (!f)
            throw std::runtime_error("cannot open dataset: " + path);
        DatasetHeader h;
        try
        {
            h = read_header(f);
        }
        catch (...)
        {
            std::fclose(f);
            throw;
        }
        std::fclose(f);
        return h;
    }

    std::vector<StoredRecord> read_dataset(const std::string &path, DatasetHeader *hdr)
    {
        std::FILE *f = std::fopen(path.c_str(), "rb");
        if (!f)
            throw std::runtime_error("cannot open dataset: " + path);
        std::vector<StoredRecord> out;
        try
        {
            const DatasetHeader h = read_header(f);
            if (hdr)
                *hdr = h;
            out.reserve(h.count);
            for (std::uint64_t i = 0; i < h.count; ++i)
                out.push_back(read_record(f, static_cast<int>(h.L), static_cast<int>(h.N)));
        }
        catch (...)
        {
            std::fclose(f);
            throw;
        }
        std::fclose(f);
        return out;
    }

    StoredRecord read_dataset_record(const std::string &path, std::uint64_t index, DatasetHeader *hdr)
    {
        std::FILE *f = std::fopen(path.c_str(), "rb");
        if (!f)
            throw std::runtime_error("cannot open dataset: " + path);
        StoredRecord r;
        try
        {
            const DatasetHeader h = read_header(f);
            if (hdr)
                *hdr = h;
            if (index >= h.count)
                throw std::runtime_error("record index out of range");
            const std::uint64_t off =
                kHeaderBytes + index * record_bytes(static_cast<int>(h.L), static_cast<int>(h.N));
            if (std::fseek(f, static_cast<long>(off), SEEK_SET) != 0)
                throw std::runtime_error("dataset seek failed");
            r = read_record(f, static_cast<int>(h.L), static_cast<int>(h.N));
        }
        catch (...)
        {
            std::fclose(f);
            throw;
        }
        std::fclose(f);
        return r;
    }

} // namespace dloc
