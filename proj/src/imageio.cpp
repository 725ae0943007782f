#include "octad/imageio.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace octad::io {

Image load_grayscale(const std::string& path, int target_resolution) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw Error("cannot read image: " + path);
    if (target_resolution > 0 && (m.rows != target_resolution || m.cols != target_resolution)) {
        cv::Mat resized;
        cv::resize(m, resized, cv::Size(target_resolution, target_resolution), 0, 0,
                   cv::INTER_LINEAR);
        m = resized;
    }
    Image out(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            out.at(r, c) = float(m.at<uint8_t>(r, c)) / 255.f;
    return out;
}

void save_grayscale_png(const Image& image, const std::string& path) {
    cv::Mat m(image.h, image.w, CV_8UC1);
    for (int r = 0; r < image.h; ++r)
        for (int c = 0; c < image.w; ++c) {
            float v = std::clamp(image.at(r, c), 0.f, 1.f);
            m.at<uint8_t>(r, c) = uint8_t(std::lround(v * 255.f));
        }
    if (!cv::imwrite(path, m)) throw Error("cannot write image: " + path);
}

void save_mask_png(const std::vector<uint8_t>& mask, int h, int w, const std::string& path) {
    require(mask.size() == size_t(h) * size_t(w), "save_mask_png: size mismatch");
    cv::Mat m(h, w, CV_8UC1);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            m.at<uint8_t>(r, c) = mask[size_t(r) * w + c] ? 255 : 0;
    if (!cv::imwrite(path, m)) throw Error("cannot write mask: " + path);
}

std::vector<uint8_t> load_mask_png(const std::string& path, int& h, int& w) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw Error("cannot read mask: " + path);
    h = m.rows;
    w = m.cols;
    std::vector<uint8_t> out(size_t(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out[size_t(r) * w + c] = m.at<uint8_t>(r, c) >= 128 ? 1 : 0;
    return out;
}

void save_float_map_png16(const Image& map, const std::string& path) {
    cv::Mat m(map.h, map.w, CV_16UC1);
    for (int r = 0; r < map.h; ++r)
        for (int c = 0; c < map.w; ++c) {
            float v = std::clamp(map.at(r, c), 0.f, 1.f);
            m.at<uint16_t>(r, c) = uint16_t(std::lround(v * 65535.f));
        }
    if (!cv::imwrite(path, m)) throw Error("cannot write map: " + path);
}

void save_heatmap_png(const Image& map, const std::string& path) {
    cv::Mat gray(map.h, map.w, CV_8UC1);
    for (int r = 0; r < map.h; ++r)
        for (int c = 0; c < map.w; ++c) {
            float v = std::clamp(map.at(r, c), 0.f, 1.f);
            gray.at<uint8_t>(r, c) = uint8_t(std::lround(v * 255.f));
        }
    cv::Mat color;
    cv::applyColorMap(gray, color, cv::COLORMAP_JET);
    if (!cv::imwrite(path, color)) throw Error("cannot write heatmap: " + path);
}

}  // namespace octad::io
