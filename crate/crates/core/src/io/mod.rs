pub mod tensor;
pub mod wav;

pub use tensor::{
    cir_from_tensor, cir_to_tensor, load_cir, load_tensor, save_cir, save_tensor, DType, Metadata,
    Tensor, TensorData,
};
pub use wav::{load_wav, save_wav, WavEncoding};
