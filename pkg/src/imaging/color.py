from skimage.color import rgb2lab

from .image_io import LabRaster, RgbRaster


def rgb_to_lab(img: RgbRaster) -> LabRaster:
    """
    sRGB 转 CIE LAB（D65 白点，标准 sRGB 伽马）

    Args:
        img: RGB 图像

    Returns:
        LabRaster: 原生取值的 LAB 图像
    """
    lab = rgb2lab(img.as_float(), illuminant='D65', observer='2')
    # 纯黑的 a、b 可能出现 -0.0
    return LabRaster(lab + 0.0)
