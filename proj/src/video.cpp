#include "vnlnet/video.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vnl {

namespace fs = std::filesystem;

Video::Video(int frames, int channels, int rows, int cols, float fill)
    : Video(Tensor4<float>(frames, channels, rows, cols, fill))
{
}

Video::Video(Tensor4<float> samples) : samples_(std::move(samples))
{
    if (samples_.n() < 1 || samples_.h() < 1 || samples_.w() < 1)
        throw Error("Video: every dimension must be at least 1, got " + samples_.shape_string());
    if (samples_.c() != 1 && samples_.c() != 3)
        throw Error("Video: channel count must be 1 or 3, got " + std::to_string(samples_.c()));
}

std::string Video::shape_string() const
{
    return "T=" + std::to_string(frames()) + " C=" + std::to_string(channels()) +
           " H=" + std::to_string(rows()) + " W=" + std::to_string(cols());
}

Video Video::frames_slice(int first, int count) const
{
    if (first < 0 || count < 1 || first + count > frames())
        throw Error("Video::frames_slice: range out of bounds");
    Tensor4<float> out(count, channels(), rows(), cols());
    const auto frame_len = static_cast<std::size_t>(channels()) * rows() * cols();
    std::copy_n(samples_.data().begin() + first * frame_len, count * frame_len, out.data().begin());
    return Video(std::move(out));
}

int reflect_index(std::int64_t i, int n)
{
    if (n <= 1)
        return 0;
    if (i >= 0 && i < n)
        return static_cast<int>(i);
    const std::int64_t period = 2 * static_cast<std::int64_t>(n - 1);
    std::int64_t r = i % period;
    if (r < 0)
        r += period;
    return static_cast<int>(r < n ? r : period - r);
}

float sample_extended(const Video& v, std::int64_t x, std::int64_t y, std::int64_t t, int c)
{
    return v(reflect_index(t, v.frames()), c, reflect_index(y, v.rows()),
             reflect_index(x, v.cols()));
}

std::uint8_t to_byte(float value)
{
    const float clamped = std::clamp(value, 0.f, 255.f);
    return static_cast<std::uint8_t>(std::round(clamped));
}

namespace {

struct NetpbmHeader {
    int channels = 0;
    int width = 0;
    int height = 0;
};

// Reads the next whitespace-separated header token, skipping '#' comments.
int read_header_int(std::istream& in, const fs::path& path)
{
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    if (!(in >> value))
        throw Error("malformed header in " + path.string());
    return value;
}

NetpbmHeader read_header(std::istream& in, const fs::path& path)
{
    char magic[2] = {0, 0};
    in.read(magic, 2);
    NetpbmHeader h;
    if (magic[0] == 'P' && magic[1] == '5')
        h.channels = 1;
    else if (magic[0] == 'P' && magic[1] == '6')
        h.channels = 3;
    else
        throw Error("unsupported magic number in " + path.string() + " (expected P5 or P6)");
    h.width = read_header_int(in, path);
    h.height = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (h.width < 1 || h.height < 1)
        throw Error("invalid dimensions in " + path.string());
    if (maxval != 255)
        throw Error("unsupported maxval " + std::to_string(maxval) + " in " + path.string());
    in.get();  // single whitespace before raster
    return h;
}

}  // namespace

Video read_sequence(const std::vector<fs::path>& paths)
{
    if (paths.empty())
        throw Error("read_sequence: no input files");

    Video out;
    NetpbmHeader first;
    for (std::size_t t = 0; t < paths.size(); ++t) {
        std::ifstream in(paths[t], std::ios::binary);
        if (!in)
            throw Error("cannot open " + paths[t].string());
        const NetpbmHeader h = read_header(in, paths[t]);
        if (t == 0) {
            first = h;
            out = Video(static_cast<int>(paths.size()), h.channels, h.height, h.width);
        } else if (h.channels != first.channels || h.width != first.width ||
                   h.height != first.height) {
            throw Error("frame " + paths[t].string() + " does not match the dimensions of " +
                        paths[0].string());
        }
        const std::size_t count = static_cast<std::size_t>(h.width) * h.height * h.channels;
        std::vector<unsigned char> raster(count);
        in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(count));
        if (in.gcount() != static_cast<std::streamsize>(count))
            throw Error("truncated raster in " + paths[t].string());
        // interleaved RGB on disk, planar in memory
        for (int y = 0; y < h.height; ++y)
            for (int x = 0; x < h.width; ++x)
                for (int c = 0; c < h.channels; ++c)
                    out(static_cast<int>(t), c, y, x) =
                        raster[(static_cast<std::size_t>(y) * h.width + x) * h.channels + c];
    }
    return out;
}

std::vector<fs::path> list_sequence(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw Error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw Error("no .pgm/.ppm frames in " + dir.string());
    return files;
}

std::vector<fs::path> write_sequence(const Video& v, const fs::path& dir, const std::string& prefix)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error("cannot create output directory " + dir.string());

    const int digits = std::max(3, static_cast<int>(std::to_string(v.frames() - 1).size()));
    const char* ext = v.channels() == 1 ? ".pgm" : ".ppm";
    std::vector<fs::path> written;
    std::vector<unsigned char> raster(static_cast<std::size_t>(v.rows()) * v.cols() * v.channels());
    for (int t = 0; t < v.frames(); ++t) {
        std::ostringstream name;
        name << prefix << '_' << std::setw(digits) << std::setfill('0') << t << ext;
        const fs::path path = dir / name.str();
        for (int y = 0; y < v.rows(); ++y)
            for (int x = 0; x < v.cols(); ++x)
                for (int c = 0; c < v.channels(); ++c)
                    raster[(static_cast<std::size_t>(y) * v.cols() + x) * v.channels() + c] =
                        to_byte(v(t, c, y, x));
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error("cannot write " + path.string());
        out << (v.channels() == 1 ? "P5" : "P6") << '\n'
            << v.cols() << ' ' << v.rows() << "\n255\n";
        out.write(reinterpret_cast<const char*>(raster.data()),
                  static_cast<std::streamsize>(raster.size()));
        if (!out)
            throw Error("write failed for " + path.string());
        written.push_back(path);
    }
    return written;
}

}  // namespace vnl
