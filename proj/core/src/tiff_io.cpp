// Copyright (c) 2026 the isorecon authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal baseline TIFF codec: grayscale, uncompressed, one sample per pixel.
// Written because the deployment targets microscopy stacks where multi-page
// TIFF is the lingua franca; only the subset this project emits is read back.
#include <algorithm>
#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "isorecon/volume_io.hpp"

namespace isorecon {

namespace {

using json = nlohmann::json;

enum : std::uint16_t {
    kTagImageWidth = 256,
    kTagImageLength = 257,
    kTagBitsPerSample = 258,
    kTagCompression = 259,
    kTagPhotometric = 262,
    kTagImageDescription = 270,
    kTagStripOffsets = 273,
    kTagSamplesPerPixel = 277,
    kTagRowsPerStrip = 278,
    kTagStripByteCounts = 279,
    kTagSampleFormat = 339,
};

enum : std::uint16_t { kTypeShort = 3, kTypeLong = 4, kTypeAscii = 2 };

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

struct IfdEntry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::uint32_t value;
};

void encode_samples(const Volume& vol, int z, std::vector<std::uint8_t>& out) {
    const std::size_t pixels = static_cast<std::size_t>(vol.ny) * vol.nx;
    const double* src = vol.data.data() + static_cast<std::size_t>(z) * pixels;
    switch (vol.dtype) {
        case VoxelType::U8:
            out.resize(pixels);
            for (std::size_t i = 0; i < pixels; ++i)
                out[i] = static_cast<std::uint8_t>(
                    std::clamp(std::lround(src[i]), 0l, 255l));
            break;
        case VoxelType::U16: {
            out.resize(pixels * 2);
            for (std::size_t i = 0; i < pixels; ++i) {
                const auto v = static_cast<std::uint16_t>(
                    std::clamp(std::lround(src[i]), 0l, 65535l));
                out[2 * i] = static_cast<std::uint8_t>(v & 0xff);
                out[2 * i + 1] = static_cast<std::uint8_t>(v >> 8);
            }
            break;
        }
        case VoxelType::F32: {
            out.resize(pixels * 4);
            static_assert(sizeof(float) == 4);
            for (std::size_t i = 0; i < pixels; ++i) {
                const auto f = static_cast<float>(src[i]);
                std::memcpy(out.data() + 4 * i, &f, 4);  // little-endian host
            }
            break;
        }
    }
}

struct TiffReader {
    std::vector<std::uint8_t> bytes;
    bool big_endian = false;

    std::uint16_t u16(std::size_t off) const {
        detail::require_runtime(off + 2 <= bytes.size(), "TIFF: truncated file");
        return big_endian ? static_cast<std::uint16_t>(bytes[off] << 8 | bytes[off + 1])
                          : static_cast<std::uint16_t>(bytes[off + 1] << 8 | bytes[off]);
    }
    std::uint32_t u32(std::size_t off) const {
        detail::require_runtime(off + 4 <= bytes.size(), "TIFF: truncated file");
        if (big_endian)
            return (std::uint32_t(bytes[off]) << 24) | (std::uint32_t(bytes[off + 1]) << 16) |
                   (std::uint32_t(bytes[off + 2]) << 8) | bytes[off + 3];
        return (std::uint32_t(bytes[off + 3]) << 24) | (std::uint32_t(bytes[off + 2]) << 16) |
               (std::uint32_t(bytes[off + 1]) << 8) | bytes[off];
    }
};

struct RawEntry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t pos = 0;  // offset of the value/offset field
};

std::vector<std::uint32_t> entry_values(const TiffReader& r, const RawEntry& e) {
    const std::size_t elem = e.type == kTypeShort ? 2 : 4;
    const std::size_t total = elem * e.count;
    std::size_t at = total <= 4 ? e.pos : r.u32(e.pos);
    std::vector<std::uint32_t> vals(e.count);
    for (std::uint32_t i = 0; i < e.count; ++i, at += elem)
        vals[i] = e.type == kTypeShort ? r.u16(at) : r.u32(at);
    return vals;
}

}  // namespace

void write_tiff(const std::filesystem::path& path, const Volume& vol) {
    detail::require(vol.nz > 0 && vol.ny > 0 && vol.nx > 0, "write_tiff: empty volume");

    json desc;
    desc["value_range"] = {vol.value_lo, vol.value_hi};
    if (vol.voxel_size)
        desc["voxel_size"] = {(*vol.voxel_size)[0], (*vol.voxel_size)[1], (*vol.voxel_size)[2]};
    std::string desc_str = desc.dump();
    desc_str.push_back('\0');

    const std::uint16_t bits = static_cast<std::uint16_t>(voxel_size_bytes(vol.dtype) * 8);
    const std::uint16_t sample_format = vol.dtype == VoxelType::F32 ? 3 : 1;

    std::vector<std::uint8_t> out;
    out.reserve(vol.voxel_count() * voxel_size_bytes(vol.dtype) + 4096);
    out.insert(out.end(), {'I', 'I'});
    put_u16(out, 42);
    put_u32(out, 0);  // first IFD offset, patched below

    // Pixel strips first, one strip per page.
    std::vector<std::uint32_t> strip_offsets(vol.nz), strip_counts(vol.nz);
    std::vector<std::uint8_t> strip;
    for (int z = 0; z < vol.nz; ++z) {
        encode_samples(vol, z, strip);
        strip_offsets[z] = static_cast<std::uint32_t>(out.size());
        strip_counts[z] = static_cast<std::uint32_t>(strip.size());
        out.insert(out.end(), strip.begin(), strip.end());
    }

    // Description payload (first page only).
    const auto desc_offset = static_cast<std::uint32_t>(out.size());
    out.insert(out.end(), desc_str.begin(), desc_str.end());
    if (out.size() % 2) out.push_back(0);  // keep IFDs word-aligned

    std::uint32_t prev_link = 4;  // header's IFD pointer
    for (int z = 0; z < vol.nz; ++z) {
        std::vector<IfdEntry> entries = {
            {kTagImageWidth, kTypeLong, 1, static_cast<std::uint32_t>(vol.nx)},
            {kTagImageLength, kTypeLong, 1, static_cast<std::uint32_t>(vol.ny)},
            {kTagBitsPerSample, kTypeShort, 1, bits},
            {kTagCompression, kTypeShort, 1, 1},
            {kTagPhotometric, kTypeShort, 1, 1},
            {kTagStripOffsets, kTypeLong, 1, strip_offsets[z]},
            {kTagSamplesPerPixel, kTypeShort, 1, 1},
            {kTagRowsPerStrip, kTypeLong, 1, static_cast<std::uint32_t>(vol.ny)},
            {kTagStripByteCounts, kTypeLong, 1, strip_counts[z]},
            {kTagSampleFormat, kTypeShort, 1, sample_format},
        };
        if (z == 0)
            entries.insert(entries.begin() + 5,
                           IfdEntry{kTagImageDescription, kTypeAscii,
                                    static_cast<std::uint32_t>(desc_str.size()), desc_offset});

        const auto ifd_offset = static_cast<std::uint32_t>(out.size());
        for (int b = 0; b < 4; ++b)  // patch previous IFD link
            out[prev_link + b] = static_cast<std::uint8_t>((ifd_offset >> (8 * b)) & 0xff);

        put_u16(out, static_cast<std::uint16_t>(entries.size()));
        for (const IfdEntry& e : entries) {
            put_u16(out, e.tag);
            put_u16(out, e.type);
            put_u32(out, e.count);
            if (e.type == kTypeShort && e.count == 1) {
                put_u16(out, static_cast<std::uint16_t>(e.value));
                put_u16(out, 0);
            } else {
                put_u32(out, e.value);
            }
        }
        prev_link = static_cast<std::uint32_t>(out.size());
        put_u32(out, 0);  // next-IFD pointer
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    detail::require_runtime(f.good(), "cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    detail::require_runtime(f.good(), "short write: " + path.string());
}

Volume read_tiff(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    detail::require_runtime(f.good(), "cannot open: " + path.string());
    TiffReader r;
    r.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    detail::require_runtime(r.bytes.size() >= 8, "TIFF: file too small");

    if (r.bytes[0] == 'I' && r.bytes[1] == 'I')
        r.big_endian = false;
    else if (r.bytes[0] == 'M' && r.bytes[1] == 'M')
        r.big_endian = true;
    else
        detail::require_runtime(false, "TIFF: bad byte-order mark");
    detail::require_runtime(r.u16(2) == 42, "TIFF: bad magic");

    struct Page {
        std::uint32_t width = 0, height = 0, bits = 0, format = 1;
        std::vector<std::uint32_t> offsets, counts;
        std::string description;
    };
    std::vector<Page> pages;

    std::uint32_t ifd = r.u32(4);
    while (ifd != 0) {
        const std::uint16_t n = r.u16(ifd);
        Page page;
        std::uint32_t rows_per_strip = 0xffffffffu;
        for (std::uint16_t i = 0; i < n; ++i) {
            const std::size_t at = ifd + 2 + static_cast<std::size_t>(i) * 12;
            const std::uint16_t tag = r.u16(at);
            RawEntry e{r.u16(at + 2), r.u32(at + 4), at + 8};
            auto scalar = [&]() { return entry_values(r, e).at(0); };
            switch (tag) {
                case kTagImageWidth: page.width = scalar(); break;
                case kTagImageLength: page.height = scalar(); break;
                case kTagBitsPerSample: page.bits = scalar(); break;
                case kTagCompression:
                    detail::require_runtime(scalar() == 1, "TIFF: only uncompressed data supported");
                    break;
                case kTagPhotometric:
                    detail::require_runtime(scalar() <= 1, "TIFF: only grayscale supported");
                    break;
                case kTagSamplesPerPixel:
                    detail::require_runtime(scalar() == 1, "TIFF: only one sample per pixel");
                    break;
                case kTagStripOffsets: page.offsets = entry_values(r, e); break;
                case kTagStripByteCounts: page.counts = entry_values(r, e); break;
                case kTagRowsPerStrip: rows_per_strip = scalar(); break;
                case kTagSampleFormat: page.format = scalar(); break;
                case kTagImageDescription: {
                    const std::size_t at2 = e.count <= 4 ? e.pos : r.u32(e.pos);
                    detail::require_runtime(at2 + e.count <= r.bytes.size(), "TIFF: truncated file");
                    page.description.assign(reinterpret_cast<const char*>(r.bytes.data() + at2),
                                            e.count);
                    break;
                }
                default: break;  // ignore unknown tags
            }
        }
        (void)rows_per_strip;
        detail::require_runtime(page.width > 0 && page.height > 0, "TIFF: page missing dimensions");
        detail::require_runtime(!page.offsets.empty() && page.offsets.size() == page.counts.size(),
                                "TIFF: page missing strip layout");
        pages.push_back(std::move(page));
        ifd = r.u32(ifd + 2 + static_cast<std::size_t>(n) * 12);
    }
    detail::require_runtime(!pages.empty(), "TIFF: no pages");

    const Page& first = pages.front();
    VoxelType dtype;
    if (first.bits == 8 && first.format == 1)
        dtype = VoxelType::U8;
    else if (first.bits == 16 && first.format == 1)
        dtype = VoxelType::U16;
    else if (first.bits == 32 && first.format == 3)
        dtype = VoxelType::F32;
    else
        detail::require_runtime(false, "TIFF: unsupported sample layout"), dtype = VoxelType::U8;

    Volume vol(static_cast<int>(pages.size()), static_cast<int>(first.height),
               static_cast<int>(first.width), dtype);

    const std::size_t pixel_bytes = voxel_size_bytes(dtype);
    for (std::size_t z = 0; z < pages.size(); ++z) {
        const Page& p = pages[z];
        detail::require_runtime(p.width == first.width && p.height == first.height &&
                                    p.bits == first.bits && p.format == first.format,
                                "TIFF: pages disagree on layout");
        std::vector<std::uint8_t> raw;
        raw.reserve(static_cast<std::size_t>(p.width) * p.height * pixel_bytes);
        for (std::size_t sidx = 0; sidx < p.offsets.size(); ++sidx) {
            const std::size_t off = p.offsets[sidx], cnt = p.counts[sidx];
            detail::require_runtime(off + cnt <= r.bytes.size(), "TIFF: strip out of bounds");
            raw.insert(raw.end(), r.bytes.begin() + static_cast<std::ptrdiff_t>(off),
                       r.bytes.begin() + static_cast<std::ptrdiff_t>(off + cnt));
        }
        const std::size_t pixels = static_cast<std::size_t>(p.width) * p.height;
        detail::require_runtime(raw.size() == pixels * pixel_bytes, "TIFF: strip size mismatch");
        double* dst = vol.data.data() + z * pixels;
        switch (dtype) {
            case VoxelType::U8:
                for (std::size_t i = 0; i < pixels; ++i) dst[i] = raw[i];
                break;
            case VoxelType::U16:
                for (std::size_t i = 0; i < pixels; ++i) {
                    const std::uint16_t v = r.big_endian
                                                ? static_cast<std::uint16_t>(raw[2 * i] << 8 | raw[2 * i + 1])
                                                : static_cast<std::uint16_t>(raw[2 * i + 1] << 8 | raw[2 * i]);
                    dst[i] = v;
                }
                break;
            case VoxelType::F32:
                detail::require_runtime(!r.big_endian, "TIFF: big-endian float data unsupported");
                for (std::size_t i = 0; i < pixels; ++i) {
                    float f;
                    std::memcpy(&f, raw.data() + 4 * i, 4);
                    dst[i] = f;
                }
                break;
        }
    }

    vol.value_lo = 0.0;
    vol.value_hi = dtype_peak(dtype);
    if (!first.description.empty()) {
        const auto parsed = json::parse(first.description.c_str(), nullptr, false);
        if (!parsed.is_discarded()) {
            if (parsed.contains("value_range")) {
                vol.value_lo = parsed["value_range"][0].get<double>();
                vol.value_hi = parsed["value_range"][1].get<double>();
            }
            if (parsed.contains("voxel_size"))
                vol.voxel_size = {{parsed["voxel_size"][0], parsed["voxel_size"][1],
                                   parsed["voxel_size"][2]}};
        }
    }
    return vol;
}

}  // namespace isorecon
