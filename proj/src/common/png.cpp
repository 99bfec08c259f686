#include "caif/common/png.h"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace caif
{

void write_png(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> rgb)
{
	if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
	{
		throw std::invalid_argument("write_png: pixel buffer does not match " + std::to_string(width) + "x" +
																std::to_string(height) + "x3");
	}
	std::unique_ptr<FILE, decltype(&std::fclose)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
	if (!file)
	{
		throw std::runtime_error("write_png: cannot open " + path.string());
	}
	png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
	png_infop info = png ? png_create_info_struct(png) : nullptr;
	if (png == nullptr || info == nullptr)
	{
		png_destroy_write_struct(&png, &info);
		throw std::runtime_error("write_png: libpng initialisation failed");
	}
	if (setjmp(png_jmpbuf(png)))
	{
		png_destroy_write_struct(&png, &info);
		throw std::runtime_error("write_png: libpng error while writing " + path.string());
	}
	png_init_io(png, file.get());
	png_set_IHDR(
		png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
		PNG_FILTER_TYPE_DEFAULT);
	png_write_info(png, info);
	std::vector<png_bytep> rows(height);
	for (int y = 0; y < height; ++y)
	{
		rows[y] = const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3);
	}
	png_write_image(png, rows.data());
	png_write_end(png, nullptr);
	png_destroy_write_struct(&png, &info);
}

void write_png(const std::filesystem::path& path, const envs::Observation& observation)
{
	write_png(path, envs::kImageSize, envs::kImageSize, observation.pixels);
}

} // namespace caif
