from typing import Optional


class ImageDecodeError(ValueError):
    """图像无法解码"""

    def __init__(self, path: str, reason: str = ''):
        self.path = path
        message = f"无法解码图像: {path}"
        if reason:
            message = f"{message} ({reason})"
        super().__init__(message)


class PipelineStageError(RuntimeError):
    """带阶段归属的流水线错误"""

    def __init__(self, stage: str, image_id: str, cause: Optional[BaseException] = None):
        """
        Args:
            stage: 出错阶段，如 'load'、'segment'
            image_id: 图像标识
            cause: 原始异常
        """
        self.stage = stage
        self.image_id = image_id
        self.cause = cause
        detail = f": {cause}" if cause is not None else ''
        super().__init__(f"阶段 {stage} 失败 - 图像: {image_id}{detail}")
