#[no_mangle]
pub extern "C" fn proxmh_placeholder() -> i32 { 0 }
